#include "fdb/params.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fdb/errors.hpp"
#include "fdb/rng.hpp"
#include "fdb/tensor_io.hpp"

namespace fdb {

namespace {

template <typename T>
TensorT<T> make_param(std::uint64_t seed, const std::string& name, const Shape& shape, Init init,
                      int fan_in) {
    TensorT<T> t(shape);
    switch (init) {
        case Init::zeros:
            break;
        case Init::ones:
            for (auto& v : t.data) v = T(1);
            break;
        case Init::spectral_identity: {
            if (shape.empty() || shape[0] != 2)
                throw ParamError("spectral_identity init needs a [2,...] shape for " + name);
            const std::size_t plane = t.data.size() / 2;
            for (std::size_t i = 0; i < plane; ++i) t.data[i] = T(1);
            break;
        }
        case Init::fan_in: {
            if (fan_in <= 0) throw InternalError("fan_in init without fan_in for " + name);
            Rng rng = named_rng(seed, name);
            const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (auto& v : t.data) v = static_cast<T>(rng.uniform(-a, a));
            break;
        }
    }
    return t;
}

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw ParseError("truncated archive: " + path, static_cast<std::size_t>(is.tellg()));
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

template <typename T>
TensorT<T>& ParamStoreT<T>::get(const std::string& name, const Shape& shape, Init init,
                                int fan_in) {
    auto it = params_.find(name);
    if (it == params_.end())
        it = params_.emplace(name, make_param<T>(seed_, name, shape, init, fan_in)).first;
    if (!(it->second.shape == shape))
        throw ParamError("parameter shape mismatch for " + name);
    return it->second;
}

template <typename T>
TensorT<T>& ParamStoreT<T>::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ParamError("unknown parameter " + name);
    return it->second;
}

template <typename T>
const TensorT<T>& ParamStoreT<T>::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ParamError("unknown parameter " + name);
    return it->second;
}

template <typename T>
std::int64_t ParamStoreT<T>::scalar_count() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : params_) n += static_cast<std::int64_t>(t.data.size());
    return n;
}

template <typename T>
void ParamStoreT<T>::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParamError("cannot open for writing: " + path);
    write_u32(os, static_cast<std::uint32_t>(params_.size()));
    for (const auto& [name, t] : params_) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_tensor(os, t);
    }
    if (!os) throw InternalError("write failure: " + path);
}

template <typename T>
void ParamStoreT<T>::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw PrereqError("missing checkpoint: " + path);
    const std::uint32_t count = read_u32(is, path);
    std::map<std::string, TensorT<T>> loaded;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = read_u32(is, path);
        if (len > (1u << 20))
            throw ParseError("implausible name length in " + path,
                             static_cast<std::size_t>(is.tellg()));
        std::string name(len, '\0');
        if (!is.read(name.data(), len))
            throw ParseError("truncated archive: " + path, static_cast<std::size_t>(is.tellg()));
        loaded.emplace(std::move(name), read_tensor<T>(is));
    }
    params_ = std::move(loaded);
}

template <typename T>
Var BinderT<T>::operator()(const std::string& name, const Shape& shape, Init init, int fan_in) {
    auto it = by_name_.find(name);
    if (it != by_name_.end()) {
        if (!(tape_->val(it->second).shape == shape))
            throw ParamError("parameter shape mismatch for " + name);
        return it->second;
    }
    TensorT<T> value = store_->get(name, shape, init, fan_in);
    Var v = tape_->leaf(std::move(value), trainable_);
    by_name_.emplace(name, v);
    bound_.emplace_back(name, v);
    return v;
}

template class ParamStoreT<float>;
template class ParamStoreT<double>;
template class BinderT<float>;
template class BinderT<double>;

}  // namespace fdb
