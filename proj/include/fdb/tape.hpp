#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "fdb/tensor.hpp"

namespace fdb {

// Handle to a real-tensor node on a tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Handle to a complex-grid node on a tape.
struct CVar {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are appended in execution order, so walking ids
// backwards is already a topological order. Gradient buffers appear lazily:
// a node that never receives an upstream gradient never allocates one, which
// is what makes parameter freezing observable (a frozen subgraph stays
// buffer-free through backward()).
//
// Single-threaded per tape; independent tapes may run concurrently.
template <typename T>
class TapeT {
  public:
    Var leaf(TensorT<T> v, bool needs_grad);
    CVar cleaf(ComplexGridT<T> v, bool needs_grad);

    const TensorT<T>& val(Var x) const { return node(x.id).value; }
    const ComplexGridT<T>& cval(CVar x) const { return node(x.id).cvalue; }
    T scalar_value(Var x) const;

    bool needs_grad(Var x) const { return node(x.id).needs_grad; }
    bool has_grad(Var x) const { return node(x.id).grad_live; }
    bool has_grad(CVar x) const { return node(x.id).grad_live; }
    // Gradient of the last backward() w.r.t. x; throws if none was produced.
    const TensorT<T>& grad(Var x) const;
    const ComplexGridT<T>& cgrad(CVar x) const;

    // Elementwise, identical shapes.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, T alpha);
    Var leaky_relu(Var x, T slope);

    // Neural primitives. Layouts: images/features [B,C,H,W], conv weights
    // [Cout,Cin,kh,kw], dwconv weights [C,1,kh,kw], biases [C].
    Var conv2d(Var input, Var weight, Var bias, int stride, int pad);
    Var dwconv2d(Var input, Var weight, Var bias, int pad);
    Var layer_norm(Var x, Var gamma, Var beta, T eps);
    Var softmax_channels(Var x);
    Var avg_pool2(Var x);
    Var upsample2_nearest(Var x);
    Var concat_channels(Var a, Var b);

    // Per-pixel blur: x [B,C,H,W], field [B,k*k,H,W] softmax-normalized over
    // channel u*k+v; replicate boundary.
    Var reblur(Var x, Var field);

    // Reductions to scalar nodes (shape [1]).
    Var sum(Var x);
    Var mean(Var x);
    Var mean_abs_diff(Var a, Var b);
    Var weighted_sum(const std::vector<std::pair<T, Var>>& terms);

    // Frequency ops.
    CVar fft2(Var x);
    // max_imag, when given, receives the largest |imaginary| residue dropped.
    Var ifft2_real(CVar X, T* max_imag = nullptr);
    CVar cmul(CVar a, CVar b);
    // a [B,C,H,W] grid times per-channel grid w [C,H,W], broadcast over batch.
    CVar cmul_bcast(CVar a, CVar w);
    // Reinterpret a real [2,...] tensor as one complex grid (plane 0 = re).
    CVar as_complex(Var x);
    // mean over bins of |re(a-b)| + |im(a-b)|.
    Var complex_l1_mean(CVar a, CVar b);

    // Accumulate d(loss)/d(node) into every reachable gradient buffer whose
    // subgraph asked for gradients. loss must be scalar.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }
    // Total scalars held in gradient buffers; used by freeze assertions.
    std::int64_t grad_buffer_scalars() const;

  private:
    struct Node {
        TensorT<T> value;
        ComplexGridT<T> cvalue;
        bool is_complex = false;
        bool needs_grad = false;
        bool grad_live = false;
        TensorT<T> grad;
        ComplexGridT<T> cgrad;
        std::function<void(TapeT&)> back;
    };

    std::vector<Node> nodes_;

    Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
    const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

    int push_real(TensorT<T> v, bool needs_grad);
    int push_complex(ComplexGridT<T> v, bool needs_grad);

    // Gradient accumulation targets; allocate on first touch.
    TensorT<T>& gbuf(int id);
    ComplexGridT<T>& cgbuf(int id);

    friend struct TapeOps;
};

using Tape32 = TapeT<float>;
using Tape64 = TapeT<double>;

}  // namespace fdb
