#include "fdb/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fdb/image_io.hpp"

namespace fs = std::filesystem;

namespace fdb {

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest: " + path, 0);
    DatasetManifest m;
    m.root = fs::path(path).parent_path().string();
    if (m.root.empty()) m.root = ".";
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("split=", 0) == 0) {
            m.split = line.substr(6);
            continue;
        }
        ManifestEntry e;
        bool have_sharp = false, have_blurry = false, have_seed = false;
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw ParseError("manifest line " + std::to_string(lineno) + ": bad token", 0);
            const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "sharp") {
                e.sharp = val;
                have_sharp = true;
            } else if (key == "blurry") {
                e.blurry = val;
                have_blurry = true;
            } else if (key == "kernel_field") {
                e.kernel_field = val;
            } else if (key == "seed") {
                e.seed = std::stoull(val);
                have_seed = true;
            } else {
                throw ParseError("manifest line " + std::to_string(lineno) + ": unknown key " +
                                     key,
                                 0);
            }
        }
        if (!have_sharp || !have_blurry || !have_seed)
            throw ParseError("manifest line " + std::to_string(lineno) + ": missing fields", 0);
        m.entries.push_back(std::move(e));
    }
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    std::ofstream out(path);
    if (!out) throw ParamError("cannot write manifest: " + path);
    if (!m.split.empty()) out << "split=" << m.split << "\n";
    for (const auto& e : m.entries) {
        out << "sharp=" << e.sharp << " blurry=" << e.blurry;
        if (!e.kernel_field.empty()) out << " kernel_field=" << e.kernel_field;
        out << " seed=" << e.seed << "\n";
    }
}

template <typename T>
DatasetManifest synth_dataset(const std::string& sharp_dir, const std::string& out_dir,
                              const SynthParams& params, std::uint64_t seed,
                              const std::string& split) {
    std::vector<fs::path> inputs;
    for (const auto& ent : fs::directory_iterator(sharp_dir)) {
        const auto ext = ent.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") inputs.push_back(ent.path());
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw ParamError("synth_dataset: no PNM images in " + sharp_dir);

    fs::create_directories(out_dir);
    DatasetManifest m;
    m.root = out_dir;
    m.split = split;
    for (std::size_t idx = 0; idx < inputs.size(); ++idx) {
        TensorT<T> sharp;
        try {
            sharp = load_image<T>(inputs[idx].string());
        } catch (const ParseError& e) {
            std::cerr << "warning: skipping unreadable image " << inputs[idx].string() << ": "
                      << e.what() << "\n";
            continue;
        }
        const std::uint64_t entry_seed = seed ^ hash_name(inputs[idx].filename().string());
        const auto field = blur::synth_kernel_field<T>(sharp.dim(1), sharp.dim(2), params.k,
                                                       entry_seed, static_cast<T>(params.max_len),
                                                       static_cast<T>(params.smoothness));
        TensorT<T> blurry = blur::reblur(sharp, field);

        const std::string stem = inputs[idx].stem().string();
        const std::string sharp_name = stem + "_sharp" + inputs[idx].extension().string();
        const std::string blurry_name = stem + "_blurry" + inputs[idx].extension().string();
        const std::string field_name = stem + "_field.fdt";
        save_image(out_dir + "/" + sharp_name, sharp, 16);
        save_image(out_dir + "/" + blurry_name, blurry, 16);
        blur::save_field(out_dir + "/" + field_name, field, entry_seed);
        m.entries.push_back({sharp_name, blurry_name, field_name, entry_seed});
    }
    if (m.entries.empty()) throw ParamError("synth_dataset: no readable images in " + sharp_dir);
    save_manifest(out_dir + "/manifest.txt", m);
    return m;
}

namespace {

template <typename T>
TensorT<T> crop3(const TensorT<T>& x, int oi, int oj, int size) {
    const int C = x.dim(0);
    TensorT<T> out(Shape{C, size, size});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < size; ++i)
            std::copy_n(&x.at3(c, oi + i, oj), size, &out.at3(c, i, 0));
    return out;
}

template <typename T>
void flip_h3(TensorT<T>& x) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W / 2; ++j) std::swap(x.at3(c, i, j), x.at3(c, i, W - 1 - j));
}

template <typename T>
void flip_v3(TensorT<T>& x) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H / 2; ++i)
            for (int j = 0; j < W; ++j) std::swap(x.at3(c, i, j), x.at3(c, H - 1 - i, j));
}

}  // namespace

template <typename T>
PatchT<T> sample_patch(const TensorT<T>& sharp, const TensorT<T>& blurry,
                       const TensorT<T>* field_channels, int size, Rng& rng, bool augment) {
    if (sharp.rank() != 3 || !sharp.same_shape(blurry))
        throw ParamError("sample_patch: sharp/blurry must be matching [C,H,W]");
    const int H = sharp.dim(1), W = sharp.dim(2);
    if (size > H || size > W) throw ParamError("sample_patch: size exceeds image");
    if (size % 4 != 0) throw ParamError("sample_patch: size must be divisible by 4");

    const int oi = H == size ? 0 : static_cast<int>(rng.below(static_cast<std::uint64_t>(H - size + 1)));
    const int oj = W == size ? 0 : static_cast<int>(rng.below(static_cast<std::uint64_t>(W - size + 1)));
    const bool hflip = augment && rng.coin();
    const bool vflip = augment && rng.coin();

    PatchT<T> p;
    p.sharp = crop3(sharp, oi, oj, size);
    p.blurry = crop3(blurry, oi, oj, size);
    if (hflip) {
        flip_h3(p.sharp);
        flip_h3(p.blurry);
    }
    if (vflip) {
        flip_v3(p.sharp);
        flip_v3(p.blurry);
    }

    if (field_channels) {
        const auto& fc = *field_channels;
        if (fc.rank() != 4 || fc.dim(0) != 1 || fc.dim(2) != H || fc.dim(3) != W)
            throw ParamError("sample_patch: kernel-field dims must match images");
        const int kk = fc.dim(1);
        const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(kk))));
        TensorT<T> out(Shape{1, kk, size, size});
        for (int q = 0; q < kk; ++q) {
            int u = q / k, v = q % k;
            // flipping an image flips each kernel within its support too
            if (hflip) v = k - 1 - v;
            if (vflip) u = k - 1 - u;
            const int src_q = u * k + v;
            for (int i = 0; i < size; ++i)
                for (int j = 0; j < size; ++j) {
                    const int si = vflip ? oi + size - 1 - i : oi + i;
                    const int sj = hflip ? oj + size - 1 - j : oj + j;
                    out.at4(0, q, i, j) = fc.at4(0, src_q, si, sj);
                }
        }
        p.field_channels = std::move(out);
    }
    return p;
}

template DatasetManifest synth_dataset<float>(const std::string&, const std::string&,
                                              const SynthParams&, std::uint64_t,
                                              const std::string&);
template DatasetManifest synth_dataset<double>(const std::string&, const std::string&,
                                               const SynthParams&, std::uint64_t,
                                               const std::string&);
template struct PatchT<float>;
template struct PatchT<double>;
template PatchT<float> sample_patch<float>(const TensorT<float>&, const TensorT<float>&,
                                           const TensorT<float>*, int, Rng&, bool);
template PatchT<double> sample_patch<double>(const TensorT<double>&, const TensorT<double>&,
                                             const TensorT<double>*, int, Rng&, bool);

}  // namespace fdb
