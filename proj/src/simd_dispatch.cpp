#include "fdb/simd.hpp"

#include <vector>

#include "fdb/errors.hpp"

namespace fdb::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::string g_backend;

template <typename T>
const KernelTable<T>*& active_ptr() {
    static const KernelTable<T>* p = nullptr;
    return p;
}

void select_default() {
    const bool avx2 = cpu_has_avx2() && avx2_table<float>() != nullptr;
    const bool neon = neon_table<float>() != nullptr;
    if (avx2) {
        active_ptr<float>() = avx2_table<float>();
        active_ptr<double>() = avx2_table<double>();
        g_backend = "avx2";
    } else if (neon) {
        active_ptr<float>() = neon_table<float>();
        active_ptr<double>() = neon_table<double>();
        g_backend = "neon";
    } else {
        g_backend = "scalar";
    }
    if (!active_ptr<float>()) active_ptr<float>() = &scalar_table<float>();
    if (!active_ptr<double>()) active_ptr<double>() = &scalar_table<double>();
}

struct Init {
    Init() { select_default(); }
};
const Init g_init;

}  // namespace

template <>
const KernelTable<float>& active<float>() {
    return *active_ptr<float>();
}

template <>
const KernelTable<double>& active<double>() {
    return *active_ptr<double>();
}

const std::string& active_backend() { return g_backend; }

std::vector<std::string> available_backends() {
    std::vector<std::string> v{"scalar"};
    if (cpu_has_avx2() && avx2_table<float>()) v.push_back("avx2");
    if (neon_table<float>()) v.push_back("neon");
    return v;
}

void force_backend(const std::string& name) {
    if (name == "auto") {
        select_default();
        return;
    }
    if (name == "scalar") {
        active_ptr<float>() = &scalar_table<float>();
        active_ptr<double>() = &scalar_table<double>();
    } else if (name == "avx2") {
        if (!cpu_has_avx2() || !avx2_table<float>())
            throw ParamError("avx2 backend unavailable on this machine");
        active_ptr<float>() = avx2_table<float>();
        active_ptr<double>() = avx2_table<double>();
    } else if (name == "neon") {
        if (!neon_table<float>()) throw ParamError("neon backend unavailable on this machine");
        active_ptr<float>() = neon_table<float>();
        active_ptr<double>() = neon_table<double>();  // falls back below if null
        if (!active_ptr<double>()) active_ptr<double>() = &scalar_table<double>();
    } else {
        throw ParamError("unknown simd backend: " + name);
    }
    g_backend = name;
}

}  // namespace fdb::simd
