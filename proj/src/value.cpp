#include "flor/value.hpp"

#include "flor/error.hpp"
#include "flor/util.hpp"

#include <sstream>

namespace flor {

double RngState::next_double() {
    // splitmix64; top 53 bits to a double in [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngState::next_u64() {
    state += 0x9E3779B97f4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Value Value::integer(long long v) {
    Value out;
    out.kind_ = ValueKind::Int;
    out.int_ = v;
    return out;
}

Value Value::real(double v) {
    Value out;
    out.kind_ = ValueKind::Float;
    out.float_ = v;
    return out;
}

Value Value::boolean(bool v) {
    Value out;
    out.kind_ = ValueKind::Bool;
    out.bool_ = v;
    return out;
}

Value Value::str(std::string v) {
    Value out;
    out.kind_ = ValueKind::Str;
    out.text_ = std::move(v);
    return out;
}

Value Value::list(std::vector<Value> items) {
    Value out;
    out.kind_ = ValueKind::List;
    out.list_ = std::make_shared<std::vector<Value>>(std::move(items));
    return out;
}

Value Value::rng(std::uint64_t seed) {
    Value out;
    out.kind_ = ValueKind::Rng;
    out.rng_ = std::make_shared<RngState>();
    out.rng_->state = seed;
    return out;
}

Value Value::builtin(std::string name) {
    Value out;
    out.kind_ = ValueKind::Builtin;
    out.text_ = std::move(name);
    return out;
}

long long Value::as_int() const {
    if (kind_ == ValueKind::Int) return int_;
    if (kind_ == ValueKind::Bool) return bool_ ? 1 : 0;
    if (kind_ == ValueKind::Float) return static_cast<long long>(float_);
    fail("expected integer, got " + repr());
}

double Value::as_double() const {
    if (kind_ == ValueKind::Float) return float_;
    if (kind_ == ValueKind::Int) return static_cast<double>(int_);
    if (kind_ == ValueKind::Bool) return bool_ ? 1.0 : 0.0;
    fail("expected number, got " + repr());
}

bool Value::as_bool() const {
    if (kind_ == ValueKind::Bool) return bool_;
    fail("expected bool, got " + repr());
}

const std::string& Value::as_str() const {
    if (kind_ != ValueKind::Str) fail("expected text, got " + repr());
    return text_;
}

std::vector<Value>& Value::as_list() {
    if (kind_ != ValueKind::List) fail("expected list, got " + repr());
    return *list_;
}

const std::vector<Value>& Value::as_list() const {
    if (kind_ != ValueKind::List) fail("expected list, got " + repr());
    return *list_;
}

RngState& Value::as_rng() {
    if (kind_ != ValueKind::Rng) fail("expected rng, got " + repr());
    return *rng_;
}

bool Value::truthy() const {
    switch (kind_) {
        case ValueKind::Null: return false;
        case ValueKind::Int: return int_ != 0;
        case ValueKind::Float: return float_ != 0.0;
        case ValueKind::Bool: return bool_;
        case ValueKind::Str: return !text_.empty();
        case ValueKind::List: return !list_->empty();
        default: return true;
    }
}

bool Value::equals(const Value& other) const {
    if (is_number() && other.is_number()) return as_double() == other.as_double();
    if (kind_ != other.kind_) return false;
    switch (kind_) {
        case ValueKind::Null: return true;
        case ValueKind::Bool: return bool_ == other.bool_;
        case ValueKind::Str: return text_ == other.text_;
        case ValueKind::List: {
            if (list_->size() != other.list_->size()) return false;
            for (size_t i = 0; i < list_->size(); ++i)
                if (!(*list_)[i].equals((*other.list_)[i])) return false;
            return true;
        }
        case ValueKind::Rng: return rng_->state == other.rng_->state;
        case ValueKind::Builtin: return text_ == other.text_;
        default: return false;
    }
}

std::string Value::repr() const {
    switch (kind_) {
        case ValueKind::Null: return "none";
        case ValueKind::Int: return util::format_int(int_);
        case ValueKind::Float: return util::format_double(float_);
        case ValueKind::Bool: return bool_ ? "true" : "false";
        case ValueKind::Str: return text_;
        case ValueKind::List: {
            std::string out = "[";
            for (size_t i = 0; i < list_->size(); ++i) {
                if (i) out += ", ";
                out += (*list_)[i].repr();
            }
            return out + "]";
        }
        case ValueKind::Rng: return "<rng " + std::to_string(rng_->state) + ">";
        case ValueKind::Builtin: return "<builtin " + text_ + ">";
    }
    return "?";
}

bool Value::serializable() const {
    switch (kind_) {
        case ValueKind::Builtin: return false;
        case ValueKind::List:
            for (const auto& v : *list_)
                if (!v.serializable()) return false;
            return true;
        default: return true;
    }
}

// Tagged, length-prefixed text encoding; floats use the shortest
// round-trip form so restores are bit-exact.
static void encode(const Value& v, std::string& out) {
    switch (v.kind()) {
        case ValueKind::Null: out += "N;"; break;
        case ValueKind::Int: out += "I" + util::format_int(v.as_int()) + ";"; break;
        case ValueKind::Float: out += "F" + util::format_double(v.as_double()) + ";"; break;
        case ValueKind::Bool: out += v.as_bool() ? "B1;" : "B0;"; break;
        case ValueKind::Str: {
            const auto& s = v.as_str();
            out += "S" + std::to_string(s.size()) + ":" + s;
            break;
        }
        case ValueKind::List: {
            const auto& items = v.as_list();
            out += "L" + std::to_string(items.size()) + ":";
            for (const auto& item : items) encode(item, out);
            break;
        }
        case ValueKind::Rng:
            out += "R" + std::to_string(const_cast<Value&>(v).as_rng().state) + ";";
            break;
        default: fail("value not serializable: " + v.repr());
    }
}

std::string Value::capture_state() const {
    std::string out;
    encode(*this, out);
    return out;
}

static Value decode(const std::string& s, size_t& pos) {
    if (pos >= s.size()) fail("truncated state blob");
    char tag = s[pos++];
    auto take_until = [&](char stop) {
        size_t end = s.find(stop, pos);
        if (end == std::string::npos) fail("malformed state blob");
        std::string tok = s.substr(pos, end - pos);
        pos = end + 1;
        return tok;
    };
    switch (tag) {
        case 'N': take_until(';'); return Value();
        case 'I': {
            auto v = util::parse_int(take_until(';'));
            if (!v) fail("malformed int in state blob");
            return Value::integer(*v);
        }
        case 'F': {
            auto v = util::parse_double(take_until(';'));
            if (!v) fail("malformed float in state blob");
            return Value::real(*v);
        }
        case 'B': return Value::boolean(take_until(';') == "1");
        case 'S': {
            auto n = util::parse_int(take_until(':'));
            if (!n || pos + static_cast<size_t>(*n) > s.size()) fail("malformed str in state blob");
            std::string text = s.substr(pos, static_cast<size_t>(*n));
            pos += static_cast<size_t>(*n);
            return Value::str(std::move(text));
        }
        case 'L': {
            auto n = util::parse_int(take_until(':'));
            if (!n) fail("malformed list in state blob");
            std::vector<Value> items;
            items.reserve(static_cast<size_t>(*n));
            for (long long i = 0; i < *n; ++i) items.push_back(decode(s, pos));
            return Value::list(std::move(items));
        }
        case 'R': {
            auto tok = take_until(';');
            std::uint64_t st = std::stoull(tok);
            auto v = Value::rng(0);
            v.as_rng().state = st;
            return v;
        }
        default: fail(std::string("unknown state tag '") + tag + "'");
    }
}

Value Value::restore_state(const std::string& bytes) {
    size_t pos = 0;
    Value v = decode(bytes, pos);
    if (pos != bytes.size()) fail("trailing bytes in state blob");
    return v;
}

}  // namespace flor
