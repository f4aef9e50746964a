#ifndef MVIVM_VALUES_HPP
#define MVIVM_VALUES_HPP

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mvivm {

// Domain constants are opaque strings compared by equality. They are interned
// into dense 32-bit ids so tuples can be hashed and compared cheaply.
using Value = std::uint32_t;

class ValuePool {
public:
    Value id(std::string_view s);
    const std::string& str(Value v) const { return strings_[v]; }
    std::size_t size() const { return strings_.size(); }

private:
    std::deque<std::string> strings_;
    std::unordered_map<std::string_view, Value> index_;
};

// Process-wide pool. Engines are single-threaded per the concurrency contract;
// the pool itself is only grown, never mutated in place.
ValuePool& pool();

inline Value intern(std::string_view s) { return pool().id(s); }
inline const std::string& value_str(Value v) { return pool().str(v); }

using Tuple = std::vector<Value>;

struct TupleHash {
    std::size_t operator()(const Tuple& t) const {
        std::size_t h = 1469598103934665603ull;
        for (Value v : t) {
            h ^= v + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return h;
    }
};

Tuple make_tuple(const std::vector<std::string>& values);
std::string tuple_str(const Tuple& t);

}  // namespace mvivm

#endif
