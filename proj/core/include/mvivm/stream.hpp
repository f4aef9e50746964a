#ifndef MVIVM_STREAM_HPP
#define MVIVM_STREAM_HPP

#include <memory>
#include <optional>
#include <vector>

#include "mvivm/values.hpp"

namespace mvivm {

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
class StreamImpl {
public:
    virtual ~StreamImpl() = default;
    virtual std::optional<Tuple> next() = 0;
};
}  // namespace detail

// Pull-based result stream. Engines hand these out; an update to the engine
// invalidates outstanding streams (next() then throws EngineError).
class TupleStream {
public:
    explicit TupleStream(std::unique_ptr<detail::StreamImpl> impl) : impl_(std::move(impl)) {}
    std::optional<Tuple> next() { return impl_->next(); }
    std::vector<Tuple> collect() {
        std::vector<Tuple> out;
        while (auto t = next()) out.push_back(std::move(*t));
        return out;
    }

private:
    std::unique_ptr<detail::StreamImpl> impl_;
};

}  // namespace mvivm

#endif
