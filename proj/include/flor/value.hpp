#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace flor {

// Deterministic generator handed to scripts via rng(seed); checkpointable.
struct RngState {
    std::uint64_t state = 0;
    double next_double();
    std::uint64_t next_u64();
};

enum class ValueKind { Null, Int, Float, Bool, Str, List, Rng, Builtin };

// Script runtime value. Int/Float/Bool/Str log natively; List and Rng go
// through the checkpoint serializer (blob-ref); Builtin is not serializable.
class Value {
public:
    Value() : kind_(ValueKind::Null) {}
    static Value integer(long long v);
    static Value real(double v);
    static Value boolean(bool v);
    static Value str(std::string v);
    static Value list(std::vector<Value> items);
    static Value rng(std::uint64_t seed);
    static Value builtin(std::string name);

    ValueKind kind() const { return kind_; }
    bool is_null() const { return kind_ == ValueKind::Null; }
    bool is_number() const { return kind_ == ValueKind::Int || kind_ == ValueKind::Float; }

    long long as_int() const;
    double as_double() const;  // Int promotes
    bool as_bool() const;
    const std::string& as_str() const;
    std::vector<Value>& as_list();
    const std::vector<Value>& as_list() const;
    RngState& as_rng();
    const std::string& builtin_name() const { return text_; }

    bool truthy() const;
    bool equals(const Value& other) const;

    // Text form used for log values and display.
    std::string repr() const;

    // Checkpoint serializer: capture-state -> bytes, restore-state <- bytes.
    bool serializable() const;
    std::string capture_state() const;
    static Value restore_state(const std::string& bytes);

private:
    ValueKind kind_;
    long long int_ = 0;
    double float_ = 0;
    bool bool_ = false;
    std::string text_;
    std::shared_ptr<std::vector<Value>> list_;
    std::shared_ptr<RngState> rng_;
};

}  // namespace flor
