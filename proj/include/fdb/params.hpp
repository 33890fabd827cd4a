#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fdb/tape.hpp"
#include "fdb/tensor.hpp"

namespace fdb {

enum class Init {
    fan_in,             // uniform in [-a, a], a = 1/sqrt(fan_in)
    zeros,              // residual-branch output convs, biases
    ones,               // layer-norm gain
    spectral_identity,  // [2,C,H,W] complex grid at 1 + 0i
};

// Named parameter tensors. Creation is deterministic per (seed, name): the
// draw for one parameter never depends on which other parameters exist or in
// what order they were created.
template <typename T>
class ParamStoreT {
  public:
    explicit ParamStoreT(std::uint64_t seed = 0) : seed_(seed) {}

    // Fetches name, creating it on first use. Shape must match on reuse.
    TensorT<T>& get(const std::string& name, const Shape& shape, Init init, int fan_in = 0);

    bool has(const std::string& name) const { return params_.count(name) != 0; }
    TensorT<T>& at(const std::string& name);
    const TensorT<T>& at(const std::string& name) const;
    const std::map<std::string, TensorT<T>>& all() const { return params_; }
    std::size_t count() const { return params_.size(); }
    std::int64_t scalar_count() const;
    std::uint64_t seed() const { return seed_; }

    // Archive: u32 LE count, then per entry u32 LE name length, name bytes,
    // tensor in the portable tensor file format.
    void save(const std::string& path) const;
    // Replaces current contents.
    void load(const std::string& path);

  private:
    std::uint64_t seed_ = 0;
    std::map<std::string, TensorT<T>> params_;
};

// Places store parameters onto a tape for one forward build. Binding the same
// name twice yields the same node, so parameter sharing is fan-out on the
// tape. trainable=false binds frozen leaves: no gradient buffers ever appear
// for them, which is the Stage-II freeze contract.
template <typename T>
class BinderT {
  public:
    BinderT(TapeT<T>& tape, ParamStoreT<T>& store, bool trainable)
        : tape_(&tape), store_(&store), trainable_(trainable) {}

    Var operator()(const std::string& name, const Shape& shape, Init init, int fan_in = 0);

    // Serves name from an existing node instead of the store; gradient checks
    // use this to treat a chosen parameter as a differentiated input.
    void route(const std::string& name, Var v) { by_name_[name] = v; }

    const std::vector<std::pair<std::string, Var>>& bound() const { return bound_; }
    ParamStoreT<T>& store() { return *store_; }
    bool trainable() const { return trainable_; }

  private:
    TapeT<T>* tape_;
    ParamStoreT<T>* store_;
    bool trainable_;
    std::vector<std::pair<std::string, Var>> bound_;
    std::map<std::string, Var> by_name_;
};

using ParamStore32 = ParamStoreT<float>;
using ParamStore64 = ParamStoreT<double>;

}  // namespace fdb
