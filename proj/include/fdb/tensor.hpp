#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fdb/errors.hpp"
#include "fdb/rng.hpp"

namespace fdb {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) {
        if (d < 0) throw ParamError("negative dimension in shape");
        n *= d;
    }
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// Dense row-major real tensor. Feature maps use the [batch, channels, height,
// width] convention throughout.
template <typename T>
struct TensorT {
    Shape shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(Shape s, T fill = T(0))
        : shape(std::move(s)), data(static_cast<std::size_t>(shape_numel(shape)), fill) {}

    static TensorT zeros(Shape s) { return TensorT(std::move(s)); }
    static TensorT full(Shape s, T v) { return TensorT(std::move(s), v); }
    static TensorT scalar(T v) {
        TensorT t(Shape{1});
        t.data[0] = v;
        return t;
    }
    static TensorT uniform(Shape s, T lo, T hi, Rng& rng) {
        TensorT t(std::move(s));
        for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
        return t;
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    T& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    // [B,C,H,W] accessor
    T& at4(int b, int c, int h, int w) {
        return data[static_cast<std::size_t>(
            ((static_cast<std::int64_t>(b) * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    const T& at4(int b, int c, int h, int w) const {
        return data[static_cast<std::size_t>(
            ((static_cast<std::int64_t>(b) * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }

    // [C,H,W] accessor
    T& at3(int c, int h, int w) {
        return data[static_cast<std::size_t>(
            (static_cast<std::int64_t>(c) * shape[1] + h) * shape[2] + w)];
    }
    const T& at3(int c, int h, int w) const {
        return data[static_cast<std::size_t>(
            (static_cast<std::int64_t>(c) * shape[1] + h) * shape[2] + w)];
    }

    bool all_finite() const {
        for (const T& v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

// Paired real/imaginary buffers holding 2D spectra; the last two dimensions
// are the spatial axes the transforms act on.
template <typename T>
struct ComplexGridT {
    Shape shape;
    std::vector<T> re, im;

    ComplexGridT() = default;
    explicit ComplexGridT(Shape s)
        : shape(std::move(s)),
          re(static_cast<std::size_t>(shape_numel(shape)), T(0)),
          im(static_cast<std::size_t>(shape_numel(shape)), T(0)) {}

    std::int64_t numel() const { return static_cast<std::int64_t>(re.size()); }
    bool same_shape(const ComplexGridT& o) const { return shape == o.shape; }
    int height() const { return shape.at(shape.size() - 2); }
    int width() const { return shape.back(); }

    bool all_finite() const {
        for (const T& v : re)
            if (!std::isfinite(static_cast<double>(v))) return false;
        for (const T& v : im)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

using Tensor32 = TensorT<float>;
using Tensor64 = TensorT<double>;

}  // namespace fdb
