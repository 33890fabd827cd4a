#include "fdb/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fdb/rng.hpp"

namespace fdb {
namespace {

template <typename T>
double eval_at(const GradCheckFn<T>& f, const std::vector<TensorT<T>>& inputs) {
    TapeT<T> tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const auto& t : inputs) vars.push_back(tape.leaf(t, false));
    const double v = static_cast<double>(tape.scalar_value(f(tape, vars)));
    if (!std::isfinite(v)) throw ValidationError("grad_check: non-finite function value");
    return v;
}

}  // namespace

template <typename T>
double grad_check(const GradCheckFn<T>& f, const std::vector<TensorT<T>>& inputs, T eps,
                  int max_coords, std::uint64_t seed) {
    // analytic pass
    TapeT<T> tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const auto& t : inputs) vars.push_back(tape.leaf(t, true));
    Var loss = f(tape, vars);
    if (!std::isfinite(static_cast<double>(tape.scalar_value(loss))))
        throw ValidationError("grad_check: non-finite loss");
    tape.backward(loss);

    std::vector<TensorT<T>> analytic;
    analytic.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i)
        analytic.push_back(tape.has_grad(vars[i]) ? tape.grad(vars[i])
                                                  : TensorT<T>::zeros(inputs[i].shape));

    Rng rng = named_rng(seed, "grad-check-coords");
    double worst = 0;
    std::vector<TensorT<T>> work = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::int64_t n = inputs[i].numel();
        std::vector<std::int64_t> coords;
        if (max_coords > 0 && n > max_coords) {
            coords.reserve(static_cast<std::size_t>(max_coords));
            for (int c = 0; c < max_coords; ++c)
                coords.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n))));
            std::sort(coords.begin(), coords.end());
            coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        } else {
            coords.resize(static_cast<std::size_t>(n));
            std::iota(coords.begin(), coords.end(), 0);
        }
        for (std::int64_t c : coords) {
            const T saved = work[i][c];
            work[i][c] = saved + eps;
            const double up = eval_at(f, work);
            work[i][c] = saved - eps;
            const double dn = eval_at(f, work);
            work[i][c] = saved;
            const double cd = (up - dn) / (2.0 * static_cast<double>(eps));
            const double an = static_cast<double>(analytic[i][c]);
            const double rel =
                std::abs(an - cd) / std::max({std::abs(an), std::abs(cd), 1e-8});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

template double grad_check<float>(const GradCheckFn<float>&, const std::vector<TensorT<float>>&,
                                  float, int, std::uint64_t);
template double grad_check<double>(const GradCheckFn<double>&,
                                   const std::vector<TensorT<double>>&, double, int,
                                   std::uint64_t);

}  // namespace fdb
