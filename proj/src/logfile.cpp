#include "flor/logfile.hpp"

#include "flor/error.hpp"
#include "flor/util.hpp"

#include <json.hpp>

namespace flor {

using nlohmann::json;

std::string chain_key(const std::vector<CtxFrame>& ctx) {
    std::string key;
    for (const auto& f : ctx) {
        key += f.loop_name;
        key += '\x1f';
        key += std::to_string(f.loop_iteration);
        key += '\x1e';
    }
    return key;
}

std::string to_logfile_json(const RunLog& run) {
    json doc;
    doc["flor_schema"] = 1;
    doc["projid"] = run.header.projid;
    doc["tstamp"] = run.header.tstamp;
    doc["filename"] = run.header.filename;
    doc["mode"] = run.header.replay ? "replay" : "record";
    doc["status"] = run.header.status;
    if (run.header.replay) {
        doc["replay_of"] = run.header.replay_of;
        doc["scan"] = run.header.scan;
    }
    json records = json::array();
    for (const auto& r : run.records) {
        json rec;
        rec["value_name"] = r.value_name;
        rec["value"] = r.value;
        rec["value_type"] = r.value_type;
        if (!r.ctx.empty()) {
            json chain = json::array();
            for (const auto& f : r.ctx) {
                chain.push_back({{"ctx_id", f.ctx_id},
                                 {"loop_name", f.loop_name},
                                 {"loop_entries", f.loop_entries},
                                 {"loop_iteration", f.loop_iteration}});
            }
            rec["ctx"] = std::move(chain);
        }
        records.push_back(std::move(rec));
    }
    doc["records"] = std::move(records);
    return doc.dump(1);
}

RunLog parse_logfile_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("logfile is not valid JSON: ") + e.what());
    }
    RunLog run;
    try {
        if (doc.at("flor_schema").get<int>() != 1) fail("unsupported flor_schema");
        run.header.projid = doc.at("projid").get<std::string>();
        run.header.tstamp = doc.at("tstamp").get<std::string>();
        run.header.filename = doc.at("filename").get<std::string>();
        run.header.replay = doc.at("mode").get<std::string>() == "replay";
        run.header.status = doc.value("status", "ok");
        run.header.replay_of = doc.value("replay_of", "");
        run.header.scan = doc.value("scan", "");
        size_t idx = 0;
        for (const auto& rec : doc.at("records")) {
            RawRecord r;
            try {
                r.value_name = rec.at("value_name").get<std::string>();
                r.value = rec.at("value").get<std::string>();
                r.value_type = rec.at("value_type").get<int>();
                if (rec.contains("ctx")) {
                    for (const auto& f : rec.at("ctx")) {
                        CtxFrame frame;
                        frame.ctx_id = f.at("ctx_id").get<long long>();
                        frame.loop_name = f.at("loop_name").get<std::string>();
                        frame.loop_entries = f.at("loop_entries").get<long long>();
                        frame.loop_iteration = f.at("loop_iteration").get<long long>();
                        r.ctx.push_back(std::move(frame));
                    }
                }
            } catch (const json::exception& e) {
                fail("malformed record at index " + std::to_string(idx) + ": " + e.what());
            }
            if (r.value_type < 1 || r.value_type > 5)
                fail("malformed record at index " + std::to_string(idx) + ": bad value_type " +
                     std::to_string(r.value_type));
            run.records.push_back(std::move(r));
            ++idx;
        }
    } catch (const json::exception& e) {
        fail(std::string("malformed logfile: ") + e.what());
    }
    return run;
}

void write_logfile(const RunLog& run, const std::filesystem::path& path) {
    util::write_file(path, to_logfile_json(run));
}

RunLog read_logfile(const std::filesystem::path& path) {
    return parse_logfile_json(util::read_file(path));
}

}  // namespace flor
