#include "fdb/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "fdb/errors.hpp"
#include "fdb/image_io.hpp"
#include "fdb/metrics.hpp"
#include "fdb/nn.hpp"

namespace fdb {

template <typename T>
Var loss_ke(TapeT<T>& tape, Var field, Var x, Var y) {
    return tape.mean_abs_diff(tape.reblur(x, field), y);
}

template <typename T>
Var loss_cont(TapeT<T>& tape, Var xh, Var x) {
    return tape.mean_abs_diff(xh, x);
}

template <typename T>
Var loss_freq(TapeT<T>& tape, Var xh, Var x) {
    return tape.complex_l1_mean(tape.fft2(xh), tape.fft2(x));
}

template <typename T>
Var loss_phase2(TapeT<T>& tape, Var xh, Var x, T lambda) {
    return tape.weighted_sum(
        {{T(1), loss_cont(tape, xh, x)}, {lambda, loss_freq(tape, xh, x)}});
}

template <typename T>
Var loss_phase3(TapeT<T>& tape, Var xh, Var x, Var y, Var field, T lambda1, T lambda2) {
    return tape.weighted_sum({{T(1), loss_cont(tape, xh, x)},
                              {lambda1, loss_freq(tape, xh, x)},
                              {lambda2, tape.mean_abs_diff(tape.reblur(xh, field), y)}});
}

double cosine_lr(std::int64_t iter, std::int64_t total, double base_lr, double min_lr) {
    if (total <= 0) return base_lr;
    double t = static_cast<double>(iter) / static_cast<double>(total);
    t = std::clamp(t, 0.0, 1.0);
    return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(3.14159265358979323846 * t));
}

template <typename T>
int AdamT<T>::step(ParamStoreT<T>& store,
                   const std::vector<std::pair<std::string, const TensorT<T>*>>& grads,
                   double lr) {
    ++t_;
    const T bc1 = T(1) - static_cast<T>(std::pow(beta1_, static_cast<double>(t_)));
    const T bc2 = T(1) - static_cast<T>(std::pow(beta2_, static_cast<double>(t_)));
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    const T eps = static_cast<T>(eps_), step_lr = static_cast<T>(lr);
    int skipped = 0;
    for (const auto& [name, g] : grads) {
        TensorT<T>& p = store.at(name);
        if (g->shape != p.shape)
            throw InternalError("adam: gradient shape mismatch for " + name);
        bool finite = true;
        for (T v : g->data)
            if (!std::isfinite(static_cast<double>(v))) {
                finite = false;
                break;
            }
        if (!finite) {
            ++skipped;
            continue;
        }
        Moments& mo = state_[name];
        if (mo.m.data.empty()) {
            mo.m = TensorT<T>::zeros(p.shape);
            mo.v = TensorT<T>::zeros(p.shape);
        }
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const T gi = g->data[i];
            mo.m.data[i] = b1 * mo.m.data[i] + (T(1) - b1) * gi;
            mo.v.data[i] = b2 * mo.v.data[i] + (T(1) - b2) * gi * gi;
            const T mhat = mo.m.data[i] / bc1;
            const T vhat = mo.v.data[i] / bc2;
            p.data[i] -= step_lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
    return skipped;
}

template <typename T>
LoadedDatasetT<T> load_dataset(const DatasetManifest& m, std::size_t begin, std::size_t end) {
    LoadedDatasetT<T> d;
    end = std::min(end, m.entries.size());
    if (begin >= end) throw ParamError("load_dataset: empty entry selection");
    for (std::size_t i = begin; i < end; ++i) {
        d.sharp.push_back(load_image<T>(m.sharp_path(i)));
        d.blurry.push_back(load_image<T>(m.blurry_path(i)));
        if (!m.entries[i].kernel_field.empty()) {
            auto f = blur::load_field<T>(m.field_path(i));
            if (d.k == 0)
                d.k = f.k;
            else if (d.k != f.k)
                throw CompatError("load_dataset: kernel sizes differ between entries");
            d.fields.push_back(blur::field_to_channels(f));
        } else {
            d.fields.push_back(TensorT<T>{});
        }
        if (d.sharp.back().shape != d.blurry.back().shape)
            throw CompatError("load_dataset: sharp/blurry dims differ for entry " +
                              std::to_string(i));
    }
    return d;
}

namespace {

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// items must share a shape; [C,H,W] gains a batch axis, [1,C,H,W] stacks
// along the existing one.
template <typename T>
TensorT<T> stack_batch(const std::vector<TensorT<T>>& items) {
    const Shape& s = items[0].shape;
    Shape out_shape;
    if (s.size() == 4) {
        if (s[0] != 1) throw InternalError("stack_batch: expected singleton batch dim");
        out_shape = s;
        out_shape[0] = static_cast<int>(items.size());
    } else if (s.size() == 3) {
        out_shape = {static_cast<int>(items.size()), s[0], s[1], s[2]};
    } else {
        throw InternalError("stack_batch: rank must be 3 or 4");
    }
    TensorT<T> out = TensorT<T>::zeros(out_shape);
    std::size_t off = 0;
    for (const auto& it : items) {
        if (it.shape != s) throw InternalError("stack_batch: mixed shapes");
        std::copy(it.data.begin(), it.data.end(), out.data.begin() + off);
        off += it.data.size();
    }
    return out;
}

// Deterministic centered crop of the last two axes.
template <typename T>
TensorT<T> center_crop(const TensorT<T>& x, int size) {
    const int h = x.shape[x.shape.size() - 2];
    const int w = x.shape[x.shape.size() - 1];
    if (h < size || w < size) throw ParamError("center_crop: patch larger than image");
    Shape s = x.shape;
    s[s.size() - 2] = size;
    s[s.size() - 1] = size;
    TensorT<T> out = TensorT<T>::zeros(s);
    std::int64_t planes = 1;
    for (std::size_t i = 0; i + 2 < x.shape.size(); ++i) planes *= x.shape[i];
    const int oi = (h - size) / 2, oj = (w - size) / 2;
    for (std::int64_t p = 0; p < planes; ++p)
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j)
                out.data[(p * size + i) * size + j] =
                    x.data[(p * static_cast<std::int64_t>(h) + oi + i) * w + oj + j];
    return out;
}

struct LossParts {
    double total = 0, cont = 0, freq = 0, extra = 0;  // extra: ke or reblur term
};

}  // namespace

template <typename T>
StageOutcome run_stage(const TrainConfig& cfg, const KEConfig& ke_cfg,
                       const DeblurNetConfig& net_cfg, const LoadedDatasetT<T>& data,
                       ParamStoreT<T>& ke_store, ParamStoreT<T>& net_store, bool non_blind) {
    if (cfg.stage < 1 || cfg.stage > 3) throw ParamError("train: stage must be 1, 2, or 3");
    if (cfg.iterations < 0) throw ParamError("train: iterations must be nonnegative");
    if (cfg.batch_size <= 0 || cfg.patch <= 0)
        throw ParamError("train: batch size and patch must be positive");
    if (!(cfg.base_lr > 0) || !(cfg.min_lr >= 0) || cfg.min_lr > cfg.base_lr)
        throw ParamError("train: base_lr must be positive and min_lr in [0, base_lr]");
    const bool freeze = cfg.freeze_ke < 0 ? cfg.stage == 2 : cfg.freeze_ke != 0;
    if (freeze != (cfg.stage == 2))
        throw ParamError("train: freeze flag inconsistent with stage");
    const bool use_prior = net_cfg.use_prior;
    if (!use_prior && cfg.stage == 1)
        throw CompatError("train: stage I trains the kernel prior; prior is disabled");
    if (!use_prior && non_blind)
        throw CompatError("train: ground-truth kernels require the prior path");
    if (non_blind && cfg.stage == 1)
        throw CompatError("train: stage I is self-supervised; ground-truth kernels unused");
    if (data.sharp.empty()) throw ParamError("train: empty dataset");

    int mult = 4;
    if (use_prior) mult = std::max(mult, 1 << (ke_cfg.levels - 1));
    if (cfg.patch % mult != 0)
        throw ParamError("train: patch must be divisible by " + std::to_string(mult));

    const bool need_gt = non_blind;
    if (need_gt)
        for (const auto& f : data.fields)
            if (f.data.empty())
                throw PrereqError("train: ground-truth kernel fields missing from dataset");
    const bool blind_prior = use_prior && !non_blind;
    if (blind_prior && cfg.stage >= 2 && ke_store.count() == 0)
        throw PrereqError("train: stage " + std::to_string(cfg.stage) +
                          " needs estimator parameters from stage I");

    const bool train_ke = blind_prior && (cfg.stage == 1 || cfg.stage == 3);
    const bool train_net = cfg.stage >= 2;

    // Builds the stage graph for one batch; binders must outlive the tape use.
    auto build = [&](TapeT<T>& tape, BinderT<T>& bke, BinderT<T>& bnet, const TensorT<T>& xb,
                     const TensorT<T>& yb, const TensorT<T>* fb, LossParts& parts) -> Var {
        Var x = tape.leaf(xb, false);
        Var y = tape.leaf(yb, false);
        Var field;
        if (use_prior) {
            if (non_blind)
                field = tape.leaf(*fb, false);
            else
                field = ke_forward(tape, bke, ke_cfg, y);
        }
        Var loss;
        if (cfg.stage == 1) {
            loss = loss_ke(tape, field, x, y);
            parts.extra = static_cast<double>(tape.scalar_value(loss));
        } else {
            Var xh = model_forward(tape, bnet, net_cfg, y, field);
            Var cont = loss_cont(tape, xh, x);
            Var freq = loss_freq(tape, xh, x);
            std::vector<std::pair<T, Var>> terms{{T(1), cont},
                                                 {static_cast<T>(cfg.lambda_freq), freq}};
            if (cfg.stage == 3 && use_prior) {
                Var rb = tape.mean_abs_diff(tape.reblur(xh, field), y);
                terms.push_back({static_cast<T>(cfg.lambda_reblur), rb});
                parts.extra = static_cast<double>(tape.scalar_value(rb));
            }
            loss = tape.weighted_sum(terms);
            parts.cont = static_cast<double>(tape.scalar_value(cont));
            parts.freq = static_cast<double>(tape.scalar_value(freq));
        }
        parts.total = static_cast<double>(tape.scalar_value(loss));
        return loss;
    };

    // Loss over a fixed centered patch of every image with current weights.
    auto fixed_loss = [&]() -> LossParts {
        LossParts acc;
        for (std::size_t i = 0; i < data.sharp.size(); ++i) {
            TapeT<T> tape;
            BinderT<T> bke(tape, ke_store, false);
            BinderT<T> bnet(tape, net_store, false);
            TensorT<T> xb = center_crop(data.sharp[i], cfg.patch);
            TensorT<T> yb = center_crop(data.blurry[i], cfg.patch);
            xb.shape.insert(xb.shape.begin(), 1);
            yb.shape.insert(yb.shape.begin(), 1);
            TensorT<T> fb;
            if (need_gt) fb = center_crop(data.fields[i], cfg.patch);
            LossParts parts;
            build(tape, bke, bnet, xb, yb, need_gt ? &fb : nullptr, parts);
            acc.total += parts.total;
            acc.cont += parts.cont;
            acc.freq += parts.freq;
            acc.extra += parts.extra;
        }
        const double n = static_cast<double>(data.sharp.size());
        acc.total /= n;
        acc.cont /= n;
        acc.freq /= n;
        acc.extra /= n;
        return acc;
    };

    const char* mode = !use_prior ? "baseline" : (non_blind ? "non_blind" : "blind");
    StageOutcome out;
    out.report.push_back(
        "config stage=" + std::to_string(cfg.stage) + " iterations=" +
        std::to_string(cfg.iterations) + " batch=" + std::to_string(cfg.batch_size) +
        " patch=" + std::to_string(cfg.patch) + " lambda_freq=" + fmt_num(cfg.lambda_freq) +
        " lambda_reblur=" + fmt_num(cfg.lambda_reblur) + " base_lr=" + fmt_num(cfg.base_lr) +
        " min_lr=" + fmt_num(cfg.min_lr) + " seed=" + std::to_string(cfg.seed) + " mode=" +
        mode + " augment=" + (cfg.augment ? "1" : "0") + " images=" +
        std::to_string(data.sharp.size()));

    LossParts initial = fixed_loss();
    out.initial_loss = cfg.stage == 1 ? initial.extra : initial.total;
    out.report.push_back("initial loss=" + fmt_num(initial.total) + " cont=" +
                         fmt_num(initial.cont) + " freq=" + fmt_num(initial.freq) +
                         " extra=" + fmt_num(initial.extra));

    Rng rng = named_rng(cfg.seed, "train.stage" + std::to_string(cfg.stage));
    AdamT<T> adam_ke, adam_net;
    const std::size_t n = data.sharp.size();

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = cosine_lr(iter, cfg.iterations, cfg.base_lr, cfg.min_lr);

        std::vector<TensorT<T>> xs, ys, fs;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const std::size_t idx = static_cast<std::size_t>(rng.below(n));
            auto p = sample_patch(data.sharp[idx], data.blurry[idx],
                                  need_gt ? &data.fields[idx] : nullptr, cfg.patch, rng,
                                  cfg.augment);
            xs.push_back(std::move(p.sharp));
            ys.push_back(std::move(p.blurry));
            if (need_gt) fs.push_back(std::move(*p.field_channels));
        }
        TensorT<T> xb = stack_batch(xs);
        TensorT<T> yb = stack_batch(ys);
        TensorT<T> fb;
        if (need_gt) fb = stack_batch(fs);

        TapeT<T> tape;
        BinderT<T> bke(tape, ke_store, train_ke);
        BinderT<T> bnet(tape, net_store, train_net);
        LossParts parts;
        Var loss = build(tape, bke, bnet, xb, yb, need_gt ? &fb : nullptr, parts);
        tape.backward(loss);

        if (cfg.stage == 2 && blind_prior)
            for (const auto& [name, v] : bke.bound())
                if (tape.has_grad(v))
                    throw InternalError("train: frozen estimator received a gradient: " + name);

        auto collect = [&](BinderT<T>& b) {
            std::vector<std::pair<std::string, const TensorT<T>*>> gs;
            for (const auto& [name, v] : b.bound())
                if (tape.has_grad(v)) gs.push_back({name, &tape.grad(v)});
            return gs;
        };
        int skipped = 0;
        if (train_ke) skipped += adam_ke.step(ke_store, collect(bke), lr);
        if (train_net) skipped += adam_net.step(net_store, collect(bnet), lr);
        out.skipped_updates += skipped;

        const bool log = iter % cfg.log_every == 0 || iter == cfg.iterations - 1;
        if (log) {
            std::string line = "iter=" + std::to_string(iter) + " lr=" + fmt_num(lr) +
                               " loss=" + fmt_num(parts.total);
            if (cfg.stage >= 2)
                line += " cont=" + fmt_num(parts.cont) + " freq=" + fmt_num(parts.freq);
            if (cfg.stage == 3 && use_prior) line += " reblur=" + fmt_num(parts.extra);
            out.report.push_back(line);
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            char tb[64];
            std::snprintf(tb, sizeof(tb), "iter=%d wall_ms=%.3f", iter, ms);
            out.timing.push_back(tb);
        }
        if (skipped > 0)
            out.report.push_back("iter=" + std::to_string(iter) +
                                 " event=skipped_updates count=" + std::to_string(skipped));
    }

    LossParts final = fixed_loss();
    out.final_loss = cfg.stage == 1 ? final.extra : final.total;
    out.report.push_back("final loss=" + fmt_num(final.total) + " cont=" +
                         fmt_num(final.cont) + " freq=" + fmt_num(final.freq) + " extra=" +
                         fmt_num(final.extra));
    out.report.push_back("done stage=" + std::to_string(cfg.stage) + " initial=" +
                         fmt_num(out.initial_loss) + " final=" + fmt_num(out.final_loss) +
                         " skipped=" + std::to_string(out.skipped_updates));
    return out;
}

template <typename T>
TensorT<T> restore_image(const KEConfig& ke_cfg, const DeblurNetConfig& net_cfg,
                         const TensorT<T>& blurry, const TensorT<T>* field_channels,
                         ParamStoreT<T>& ke_store, ParamStoreT<T>& net_store) {
    if (blurry.shape.size() != 3) throw ParamError("restore_image: image must be [C,H,W]");
    const int H = blurry.shape[1], W = blurry.shape[2];
    int mult = 4;
    if (net_cfg.use_prior) mult = std::max(mult, 1 << (ke_cfg.levels - 1));
    TensorT<T> y4 = blurry;
    y4.shape.insert(y4.shape.begin(), 1);
    y4 = nn::pad_to_multiple(y4, mult);

    TapeT<T> tape;
    BinderT<T> bke(tape, ke_store, false);
    BinderT<T> bnet(tape, net_store, false);
    Var y = tape.leaf(y4, false);
    Var field;
    if (net_cfg.use_prior) {
        if (field_channels)
            field = tape.leaf(nn::pad_to_multiple(*field_channels, mult), false);
        else
            field = ke_forward(tape, bke, ke_cfg, y);
    }
    Var xh = model_forward(tape, bnet, net_cfg, y, field);
    TensorT<T> rest = nn::crop_spatial(tape.val(xh), H, W);
    rest.shape.erase(rest.shape.begin());
    for (T& v : rest.data) v = std::clamp(v, T(0), T(1));
    return rest;
}

template <typename T>
EvalOutcome evaluate(const KEConfig& ke_cfg, const DeblurNetConfig& net_cfg,
                     const LoadedDatasetT<T>& data, ParamStoreT<T>& ke_store,
                     ParamStoreT<T>& net_store, bool non_blind,
                     std::vector<TensorT<T>>* dumped) {
    if (data.sharp.empty()) throw ParamError("evaluate: empty dataset");
    const bool use_prior = net_cfg.use_prior;
    if (!use_prior && non_blind)
        throw CompatError("evaluate: ground-truth kernels require the prior path");
    const bool blind_prior = use_prior && !non_blind;
    if (blind_prior && ke_store.count() == 0)
        throw PrereqError("evaluate: estimator parameters missing");
    if (non_blind)
        for (const auto& f : data.fields)
            if (f.data.empty())
                throw PrereqError("evaluate: ground-truth kernel fields missing");

    EvalOutcome out;
    for (std::size_t i = 0; i < data.sharp.size(); ++i) {
        const auto& sharp = data.sharp[i];
        TensorT<T> rest = restore_image(ke_cfg, net_cfg, data.blurry[i],
                                        non_blind ? &data.fields[i] : nullptr, ke_store,
                                        net_store);
        out.psnr_xhat.push_back(psnr(rest, sharp));
        out.ssim_xhat.push_back(ssim(rest, sharp));
        out.psnr_y.push_back(psnr(data.blurry[i], sharp));
        out.ssim_y.push_back(ssim(data.blurry[i], sharp));
        out.report.push_back("eval image=" + std::to_string(i) + " psnr_y=" +
                             fmt_num(out.psnr_y.back()) + " ssim_y=" +
                             fmt_num(out.ssim_y.back()) + " psnr=" +
                             fmt_num(out.psnr_xhat.back()) + " ssim=" +
                             fmt_num(out.ssim_xhat.back()));
        if (dumped) dumped->push_back(std::move(rest));
    }
    const double n = static_cast<double>(data.sharp.size());
    for (std::size_t i = 0; i < data.sharp.size(); ++i) {
        out.mean_psnr_xhat += out.psnr_xhat[i] / n;
        out.mean_ssim_xhat += out.ssim_xhat[i] / n;
        out.mean_psnr_y += out.psnr_y[i] / n;
        out.mean_ssim_y += out.ssim_y[i] / n;
    }
    out.report.push_back("eval mean psnr_y=" + fmt_num(out.mean_psnr_y) + " ssim_y=" +
                         fmt_num(out.mean_ssim_y) + " psnr=" + fmt_num(out.mean_psnr_xhat) +
                         " ssim=" + fmt_num(out.mean_ssim_xhat));
    return out;
}

#define FDB_TRAIN_INSTANTIATE(T)                                                          \
    template Var loss_ke<T>(TapeT<T>&, Var, Var, Var);                                    \
    template Var loss_cont<T>(TapeT<T>&, Var, Var);                                       \
    template Var loss_freq<T>(TapeT<T>&, Var, Var);                                       \
    template Var loss_phase2<T>(TapeT<T>&, Var, Var, T);                                  \
    template Var loss_phase3<T>(TapeT<T>&, Var, Var, Var, Var, T, T);                     \
    template class AdamT<T>;                                                              \
    template LoadedDatasetT<T> load_dataset<T>(const DatasetManifest&, std::size_t,       \
                                               std::size_t);                              \
    template TensorT<T> restore_image<T>(const KEConfig&, const DeblurNetConfig&,         \
                                         const TensorT<T>&, const TensorT<T>*,           \
                                         ParamStoreT<T>&, ParamStoreT<T>&);              \
    template StageOutcome run_stage<T>(const TrainConfig&, const KEConfig&,               \
                                       const DeblurNetConfig&, const LoadedDatasetT<T>&,  \
                                       ParamStoreT<T>&, ParamStoreT<T>&, bool);           \
    template EvalOutcome evaluate<T>(const KEConfig&, const DeblurNetConfig&,             \
                                     const LoadedDatasetT<T>&, ParamStoreT<T>&,           \
                                     ParamStoreT<T>&, bool, std::vector<TensorT<T>>*);

FDB_TRAIN_INSTANTIATE(float)
FDB_TRAIN_INSTANTIATE(double)

}  // namespace fdb
