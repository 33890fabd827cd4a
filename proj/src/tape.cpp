#include "fdb/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "fdb/simd.hpp"

namespace fdb {

template <typename T>
int TapeT<T>::push_real(TensorT<T> v, bool needs) {
    Node n;
    n.value = std::move(v);
    n.needs_grad = needs;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
int TapeT<T>::push_complex(ComplexGridT<T> v, bool needs) {
    Node n;
    n.cvalue = std::move(v);
    n.is_complex = true;
    n.needs_grad = needs;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
Var TapeT<T>::leaf(TensorT<T> v, bool needs_grad) {
    return Var{push_real(std::move(v), needs_grad)};
}

template <typename T>
CVar TapeT<T>::cleaf(ComplexGridT<T> v, bool needs_grad) {
    return CVar{push_complex(std::move(v), needs_grad)};
}

template <typename T>
T TapeT<T>::scalar_value(Var x) const {
    const auto& v = val(x);
    if (v.numel() != 1) throw ParamError("scalar_value: node is not scalar");
    return v.data[0];
}

template <typename T>
const TensorT<T>& TapeT<T>::grad(Var x) const {
    const Node& n = node(x.id);
    if (!n.grad_live) throw InternalError("grad: no gradient was produced for this node");
    return n.grad;
}

template <typename T>
const ComplexGridT<T>& TapeT<T>::cgrad(CVar x) const {
    const Node& n = node(x.id);
    if (!n.grad_live) throw InternalError("cgrad: no gradient was produced for this node");
    return n.cgrad;
}

template <typename T>
TensorT<T>& TapeT<T>::gbuf(int id) {
    Node& n = node(id);
    if (!n.grad_live) {
        n.grad = TensorT<T>::zeros(n.value.shape);
        n.grad_live = true;
    }
    return n.grad;
}

template <typename T>
ComplexGridT<T>& TapeT<T>::cgbuf(int id) {
    Node& n = node(id);
    if (!n.grad_live) {
        n.cgrad = ComplexGridT<T>(n.cvalue.shape);
        n.grad_live = true;
    }
    return n.cgrad;
}

template <typename T>
std::int64_t TapeT<T>::grad_buffer_scalars() const {
    std::int64_t total = 0;
    for (const Node& n : nodes_)
        if (n.grad_live)
            total += n.is_complex ? 2 * n.cgrad.numel() : n.grad.numel();
    return total;
}

template <typename T>
void TapeT<T>::backward(Var loss) {
    Node& ln = node(loss.id);
    if (ln.is_complex || ln.value.numel() != 1)
        throw ParamError("backward: loss must be a real scalar");
    gbuf(loss.id).data[0] = T(1);
    for (int id = loss.id; id >= 0; --id) {
        Node& n = node(id);
        if (n.grad_live && n.back) n.back(*this);
    }
}

// ---------------------------------------------------------------------------
// elementwise

template <typename T>
Var TapeT<T>::add(Var a, Var b) {
    const auto& va = val(a);
    const auto& vb = val(b);
    if (!va.same_shape(vb)) throw ParamError("add: shape mismatch");
    TensorT<T> out(va.shape);
    simd::active<T>().add(out.data.data(), va.data.data(), vb.data.data(), out.data.size());
    const bool ng = needs_grad(a) || needs_grad(b);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ia = a.id, ib = b.id;
        node(id).back = [id, ia, ib](TapeT& t) {
            const auto& g = t.node(id).grad;
            const auto& k = simd::active<T>();
            if (t.node(ia).needs_grad) {
                auto& ga = t.gbuf(ia);
                k.add(ga.data.data(), ga.data.data(), g.data.data(), g.data.size());
            }
            if (t.node(ib).needs_grad) {
                auto& gb = t.gbuf(ib);
                k.add(gb.data.data(), gb.data.data(), g.data.data(), g.data.size());
            }
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::sub(Var a, Var b) {
    const auto& va = val(a);
    const auto& vb = val(b);
    if (!va.same_shape(vb)) throw ParamError("sub: shape mismatch");
    TensorT<T> out(va.shape);
    simd::active<T>().sub(out.data.data(), va.data.data(), vb.data.data(), out.data.size());
    const bool ng = needs_grad(a) || needs_grad(b);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ia = a.id, ib = b.id;
        node(id).back = [id, ia, ib](TapeT& t) {
            const auto& g = t.node(id).grad;
            const auto& k = simd::active<T>();
            if (t.node(ia).needs_grad) {
                auto& ga = t.gbuf(ia);
                k.add(ga.data.data(), ga.data.data(), g.data.data(), g.data.size());
            }
            if (t.node(ib).needs_grad) {
                auto& gb = t.gbuf(ib);
                k.sub(gb.data.data(), gb.data.data(), g.data.data(), g.data.size());
            }
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::mul(Var a, Var b) {
    const auto& va = val(a);
    const auto& vb = val(b);
    if (!va.same_shape(vb)) throw ParamError("mul: shape mismatch");
    TensorT<T> out(va.shape);
    simd::active<T>().mul(out.data.data(), va.data.data(), vb.data.data(), out.data.size());
    const bool ng = needs_grad(a) || needs_grad(b);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ia = a.id, ib = b.id;
        node(id).back = [id, ia, ib](TapeT& t) {
            const auto& g = t.node(id).grad;
            const auto& k = simd::active<T>();
            if (t.node(ia).needs_grad)
                k.fmadd(t.gbuf(ia).data.data(), g.data.data(), t.node(ib).value.data.data(),
                        g.data.size());
            if (t.node(ib).needs_grad)
                k.fmadd(t.gbuf(ib).data.data(), g.data.data(), t.node(ia).value.data.data(),
                        g.data.size());
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::scale(Var a, T alpha) {
    const auto& va = val(a);
    TensorT<T> out(va.shape);
    simd::active<T>().scale(out.data.data(), alpha, va.data.data(), out.data.size());
    const bool ng = needs_grad(a);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ia = a.id;
        node(id).back = [id, ia, alpha](TapeT& t) {
            const auto& g = t.node(id).grad;
            simd::active<T>().axpy(t.gbuf(ia).data.data(), alpha, g.data.data(), g.data.size());
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::leaky_relu(Var x, T slope) {
    const auto& vx = val(x);
    TensorT<T> out(vx.shape);
    simd::active<T>().lrelu(out.data.data(), vx.data.data(), slope, out.data.size());
    const bool ng = needs_grad(x);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = x.id;
        node(id).back = [id, ix, slope](TapeT& t) {
            const auto& g = t.node(id).grad;
            simd::active<T>().lrelu_bwd(t.gbuf(ix).data.data(), t.node(ix).value.data.data(),
                                        g.data.data(), slope, g.data.size());
        };
    }
    return Var{id};
}

// ---------------------------------------------------------------------------
// normalization and shape ops

template <typename T>
Var TapeT<T>::layer_norm(Var x, Var gamma, Var beta, T eps) {
    const auto& vx = val(x);
    if (vx.rank() != 4) throw ParamError("layer_norm: expected [B,C,H,W]");
    const int B = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    if (val(gamma).numel() != C || val(beta).numel() != C)
        throw ParamError("layer_norm: gamma/beta length must equal channel count");
    if (!(eps > T(0))) throw ParamError("layer_norm: eps must be positive");

    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    // xhat plus the per-pixel 1/sigma are saved for backward
    TensorT<T> xhat(vx.shape);
    TensorT<T> inv_sigma(Shape{B, 1, H, W});
    TensorT<T> out(vx.shape);
    const auto& vg = val(gamma);
    const auto& vbeta = val(beta);
    for (int b = 0; b < B; ++b) {
        const T* xp = vx.data.data() + static_cast<std::int64_t>(b) * C * hw;
        T* invp = inv_sigma.data.data() + static_cast<std::int64_t>(b) * hw;
        for (std::int64_t p = 0; p < hw; ++p) {
            T mu = 0;
            for (int c = 0; c < C; ++c) mu += xp[c * hw + p];
            mu /= static_cast<T>(C);
            T var = 0;
            for (int c = 0; c < C; ++c) {
                const T d = xp[c * hw + p] - mu;
                var += d * d;
            }
            var /= static_cast<T>(C);
            const T inv = T(1) / std::sqrt(var + eps);
            invp[p] = inv;
            for (int c = 0; c < C; ++c) {
                const std::int64_t off = static_cast<std::int64_t>(b) * C * hw + c * hw + p;
                const T xh = (xp[c * hw + p] - mu) * inv;
                xhat.data[static_cast<std::size_t>(off)] = xh;
                out.data[static_cast<std::size_t>(off)] = vg[c] * xh + vbeta[c];
            }
        }
    }

    const bool ng = needs_grad(x) || needs_grad(gamma) || needs_grad(beta);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = x.id, ig = gamma.id, ib = beta.id;
        auto xh = std::make_shared<TensorT<T>>(std::move(xhat));
        auto inv = std::make_shared<TensorT<T>>(std::move(inv_sigma));
        node(id).back = [id, ix, ig, ib, xh, inv, B, C, H, W, hw](TapeT& t) {
            const auto& g = t.node(id).grad;
            const auto& vg = t.node(ig).value;
            if (t.node(ig).needs_grad) {
                auto& gg = t.gbuf(ig);
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t off = (static_cast<std::int64_t>(b) * C + c) * hw;
                        gg[c] += simd::active<T>().dot(g.data.data() + off,
                                                       xh->data.data() + off,
                                                       static_cast<std::size_t>(hw));
                    }
            }
            if (t.node(ib).needs_grad) {
                auto& gb = t.gbuf(ib);
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t off = (static_cast<std::int64_t>(b) * C + c) * hw;
                        gb[c] += simd::active<T>().sum(g.data.data() + off,
                                                       static_cast<std::size_t>(hw));
                    }
            }
            if (t.node(ix).needs_grad) {
                auto& gx = t.gbuf(ix);
                for (int b = 0; b < B; ++b) {
                    const std::int64_t base = static_cast<std::int64_t>(b) * C * hw;
                    for (std::int64_t p = 0; p < hw; ++p) {
                        T m1 = 0, m2 = 0;
                        for (int c = 0; c < C; ++c) {
                            const T gh = g.data[static_cast<std::size_t>(base + c * hw + p)] * vg[c];
                            m1 += gh;
                            m2 += gh * xh->data[static_cast<std::size_t>(base + c * hw + p)];
                        }
                        m1 /= static_cast<T>(C);
                        m2 /= static_cast<T>(C);
                        const T is = inv->data[static_cast<std::size_t>(
                            static_cast<std::int64_t>(b) * hw + p)];
                        for (int c = 0; c < C; ++c) {
                            const std::size_t off = static_cast<std::size_t>(base + c * hw + p);
                            const T gh = g.data[off] * vg[c];
                            gx.data[off] += is * (gh - m1 - xh->data[off] * m2);
                        }
                    }
                }
            }
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::softmax_channels(Var x) {
    const auto& vx = val(x);
    if (vx.rank() != 4) throw ParamError("softmax_channels: expected [B,C,H,W]");
    const int B = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    TensorT<T> out(vx.shape);
    for (int b = 0; b < B; ++b) {
        const std::int64_t base = static_cast<std::int64_t>(b) * C * hw;
        for (std::int64_t p = 0; p < hw; ++p) {
            T mx = vx.data[static_cast<std::size_t>(base + p)];
            for (int c = 1; c < C; ++c)
                mx = std::max(mx, vx.data[static_cast<std::size_t>(base + c * hw + p)]);
            T z = 0;
            for (int c = 0; c < C; ++c) {
                const T e = std::exp(vx.data[static_cast<std::size_t>(base + c * hw + p)] - mx);
                out.data[static_cast<std::size_t>(base + c * hw + p)] = e;
                z += e;
            }
            const T invz = T(1) / z;
            for (int c = 0; c < C; ++c)
                out.data[static_cast<std::size_t>(base + c * hw + p)] *= invz;
        }
    }
    const bool ng = needs_grad(x);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = x.id;
        node(id).back = [id, ix, B, C, hw](TapeT& t) {
            const auto& g = t.node(id).grad;
            const auto& y = t.node(id).value;
            auto& gx = t.gbuf(ix);
            for (int b = 0; b < B; ++b) {
                const std::int64_t base = static_cast<std::int64_t>(b) * C * hw;
                for (std::int64_t p = 0; p < hw; ++p) {
                    T dot = 0;
                    for (int c = 0; c < C; ++c) {
                        const std::size_t off = static_cast<std::size_t>(base + c * hw + p);
                        dot += g.data[off] * y.data[off];
                    }
                    for (int c = 0; c < C; ++c) {
                        const std::size_t off = static_cast<std::size_t>(base + c * hw + p);
                        gx.data[off] += y.data[off] * (g.data[off] - dot);
                    }
                }
            }
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::avg_pool2(Var x) {
    const auto& vx = val(x);
    if (vx.rank() != 4) throw ParamError("avg_pool2: expected [B,C,H,W]");
    const int B = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    if (H % 2 || W % 2) throw ParamError("avg_pool2: H and W must be even");
    const int Ho = H / 2, Wo = W / 2;
    TensorT<T> out(Shape{B, C, Ho, Wo});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < Ho; ++i)
                for (int j = 0; j < Wo; ++j)
                    out.at4(b, c, i, j) =
                        (vx.at4(b, c, 2 * i, 2 * j) + vx.at4(b, c, 2 * i, 2 * j + 1) +
                         vx.at4(b, c, 2 * i + 1, 2 * j) + vx.at4(b, c, 2 * i + 1, 2 * j + 1)) /
                        T(4);
    const bool ng = needs_grad(x);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = x.id;
        node(id).back = [id, ix, B, C, Ho, Wo](TapeT& t) {
            const auto& g = t.node(id).grad;
            auto& gx = t.gbuf(ix);
            for (int b = 0; b < B; ++b)
                for (int c = 0; c < C; ++c)
                    for (int i = 0; i < Ho; ++i)
                        for (int j = 0; j < Wo; ++j) {
                            const T q = g.at4(b, c, i, j) / T(4);
                            gx.at4(b, c, 2 * i, 2 * j) += q;
                            gx.at4(b, c, 2 * i, 2 * j + 1) += q;
                            gx.at4(b, c, 2 * i + 1, 2 * j) += q;
                            gx.at4(b, c, 2 * i + 1, 2 * j + 1) += q;
                        }
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::upsample2_nearest(Var x) {
    const auto& vx = val(x);
    if (vx.rank() != 4) throw ParamError("upsample2_nearest: expected [B,C,H,W]");
    const int B = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    TensorT<T> out(Shape{B, C, 2 * H, 2 * W});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    const T v = vx.at4(b, c, i, j);
                    out.at4(b, c, 2 * i, 2 * j) = v;
                    out.at4(b, c, 2 * i, 2 * j + 1) = v;
                    out.at4(b, c, 2 * i + 1, 2 * j) = v;
                    out.at4(b, c, 2 * i + 1, 2 * j + 1) = v;
                }
    const bool ng = needs_grad(x);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = x.id;
        node(id).back = [id, ix, B, C, H, W](TapeT& t) {
            const auto& g = t.node(id).grad;
            auto& gx = t.gbuf(ix);
            for (int b = 0; b < B; ++b)
                for (int c = 0; c < C; ++c)
                    for (int i = 0; i < H; ++i)
                        for (int j = 0; j < W; ++j)
                            gx.at4(b, c, i, j) +=
                                g.at4(b, c, 2 * i, 2 * j) + g.at4(b, c, 2 * i, 2 * j + 1) +
                                g.at4(b, c, 2 * i + 1, 2 * j) + g.at4(b, c, 2 * i + 1, 2 * j + 1);
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::concat_channels(Var a, Var b) {
    const auto& va = val(a);
    const auto& vb = val(b);
    if (va.rank() != 4 || vb.rank() != 4) throw ParamError("concat_channels: expected [B,C,H,W]");
    if (va.dim(0) != vb.dim(0) || va.dim(2) != vb.dim(2) || va.dim(3) != vb.dim(3))
        throw ParamError("concat_channels: batch/spatial dims must match");
    const int B = va.dim(0), Ca = va.dim(1), Cb = vb.dim(1), H = va.dim(2), W = va.dim(3);
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    TensorT<T> out(Shape{B, Ca + Cb, H, W});
    for (int bb = 0; bb < B; ++bb) {
        std::copy_n(va.data.data() + static_cast<std::int64_t>(bb) * Ca * hw, Ca * hw,
                    out.data.data() + static_cast<std::int64_t>(bb) * (Ca + Cb) * hw);
        std::copy_n(vb.data.data() + static_cast<std::int64_t>(bb) * Cb * hw, Cb * hw,
                    out.data.data() + static_cast<std::int64_t>(bb) * (Ca + Cb) * hw + Ca * hw);
    }
    const bool ng = needs_grad(a) || needs_grad(b);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ia = a.id, ib = b.id;
        node(id).back = [id, ia, ib, B, Ca, Cb, hw](TapeT& t) {
            const auto& g = t.node(id).grad;
            const auto& k = simd::active<T>();
            if (t.node(ia).needs_grad) {
                auto& ga = t.gbuf(ia);
                for (int bb = 0; bb < B; ++bb) {
                    T* dst = ga.data.data() + static_cast<std::int64_t>(bb) * Ca * hw;
                    const T* src = g.data.data() + static_cast<std::int64_t>(bb) * (Ca + Cb) * hw;
                    k.add(dst, dst, src, static_cast<std::size_t>(Ca * hw));
                }
            }
            if (t.node(ib).needs_grad) {
                auto& gb = t.gbuf(ib);
                for (int bb = 0; bb < B; ++bb) {
                    T* dst = gb.data.data() + static_cast<std::int64_t>(bb) * Cb * hw;
                    const T* src =
                        g.data.data() + static_cast<std::int64_t>(bb) * (Ca + Cb) * hw + Ca * hw;
                    k.add(dst, dst, src, static_cast<std::size_t>(Cb * hw));
                }
            }
        };
    }
    return Var{id};
}

// ---------------------------------------------------------------------------
// reductions

template <typename T>
Var TapeT<T>::sum(Var x) {
    const auto& vx = val(x);
    TensorT<T> out = TensorT<T>::scalar(simd::active<T>().sum(vx.data.data(), vx.data.size()));
    const bool ng = needs_grad(x);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = x.id;
        node(id).back = [id, ix](TapeT& t) {
            const T g = t.node(id).grad.data[0];
            auto& gx = t.gbuf(ix);
            for (auto& v : gx.data) v += g;
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::mean(Var x) {
    const auto& vx = val(x);
    const T inv = T(1) / static_cast<T>(vx.numel());
    TensorT<T> out =
        TensorT<T>::scalar(simd::active<T>().sum(vx.data.data(), vx.data.size()) * inv);
    const bool ng = needs_grad(x);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ix = x.id;
        node(id).back = [id, ix, inv](TapeT& t) {
            const T g = t.node(id).grad.data[0] * inv;
            auto& gx = t.gbuf(ix);
            for (auto& v : gx.data) v += g;
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::mean_abs_diff(Var a, Var b) {
    const auto& va = val(a);
    const auto& vb = val(b);
    if (!va.same_shape(vb)) throw ParamError("mean_abs_diff: shape mismatch");
    const T inv = T(1) / static_cast<T>(va.numel());
    TensorT<T> out = TensorT<T>::scalar(
        simd::active<T>().abs_diff_sum(va.data.data(), vb.data.data(), va.data.size()) * inv);
    const bool ng = needs_grad(a) || needs_grad(b);
    int id = push_real(std::move(out), ng);
    if (ng) {
        const int ia = a.id, ib = b.id;
        node(id).back = [id, ia, ib, inv](TapeT& t) {
            const T g = t.node(id).grad.data[0] * inv;
            const auto& va = t.node(ia).value;
            const auto& vb = t.node(ib).value;
            const bool wa = t.node(ia).needs_grad, wb = t.node(ib).needs_grad;
            TensorT<T>* ga = wa ? &t.gbuf(ia) : nullptr;
            TensorT<T>* gb = wb ? &t.gbuf(ib) : nullptr;
            for (std::size_t i = 0; i < va.data.size(); ++i) {
                const T d = va.data[i] - vb.data[i];
                const T s = d > T(0) ? g : (d < T(0) ? -g : T(0));
                if (ga) ga->data[i] += s;
                if (gb) gb->data[i] -= s;
            }
        };
    }
    return Var{id};
}

template <typename T>
Var TapeT<T>::weighted_sum(const std::vector<std::pair<T, Var>>& terms) {
    if (terms.empty()) throw ParamError("weighted_sum: no terms");
    T acc = 0;
    bool ng = false;
    for (const auto& [w, v] : terms) {
        acc += w * scalar_value(v);
        ng = ng || needs_grad(v);
    }
    int id = push_real(TensorT<T>::scalar(acc), ng);
    if (ng) {
        std::vector<std::pair<T, int>> caps;
        caps.reserve(terms.size());
        for (const auto& [w, v] : terms) caps.emplace_back(w, v.id);
        node(id).back = [id, caps](TapeT& t) {
            const T g = t.node(id).grad.data[0];
            for (const auto& [w, iv] : caps)
                if (t.node(iv).needs_grad) t.gbuf(iv).data[0] += w * g;
        };
    }
    return Var{id};
}

template class TapeT<float>;
template class TapeT<double>;

}  // namespace fdb
