#include "mvivm/values.hpp"

namespace mvivm {

Value ValuePool::id(std::string_view s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    strings_.emplace_back(s);
    Value v = static_cast<Value>(strings_.size() - 1);
    index_.emplace(std::string_view(strings_.back()), v);
    return v;
}

ValuePool& pool() {
    static ValuePool p;
    return p;
}

Tuple make_tuple(const std::vector<std::string>& values) {
    Tuple t;
    t.reserve(values.size());
    for (const auto& s : values) t.push_back(intern(s));
    return t;
}

std::string tuple_str(const Tuple& t) {
    std::string out = "(";
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += ",";
        out += value_str(t[i]);
    }
    out += ")";
    return out;
}

}  // namespace mvivm
