#include "sfdmc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "sfdmc/errors.hpp"
#include "sfdmc/image_io.hpp"
#include "sfdmc/rng.hpp"

namespace fs = std::filesystem;

namespace sfdmc {

void SynthConfig::validate() const {
    if (num_classes < 2) throw ConfigError("synthetic data needs at least 2 classes");
    if (modes_per_class < 1) throw ConfigError("modes per class must be at least 1");
    if (inter_class_overlap < 0.0 || inter_class_overlap > 1.0)
        throw ConfigError("inter-class overlap must lie in [0,1]");
    if (speckle_sigma < 0.0) throw ConfigError("speckle sigma must be non-negative");
    if (image_size < 8) throw ConfigError("image size must be at least 8");
    if (samples_per_class < 1) throw ConfigError("samples per class must be at least 1");
}

namespace {

// One blob on the class/mode parameter circle. The circle position t runs
// 0..num_classes; a class sits at integer t and its modes stretch toward
// t + overlap. Size parameters vary slowly (one full period over the whole
// circle) while orientation advances fast, and the blob is symmetric under
// 180 degrees, so headings wrap several times per class step.
struct BlobParams {
    double theta;
    double sig_major;
    double sig_minor;
};

double mode_position(const SynthConfig& cfg, int cls, int mode) {
    const double spread =
        cfg.modes_per_class > 1
            ? cfg.inter_class_overlap * mode / static_cast<double>(cfg.modes_per_class - 1)
            : 0.0;
    return cls + spread;
}

// Orientation advances just under 2.5 half-turns per class step. A mode
// sitting 0.6 of the way toward the next class then lands within a few
// degrees of that class's own heading modulo the blob symmetry (0.4 * 2.5
// half-turns would close the wrap exactly), so adjacent classes nearly
// collide in orientation and differ mainly through the gentle size curves,
// while the two modes of one class sit nearly crosswise. Base classes
// themselves stay separated: the wrap residue leaves every pair of class
// headings at least a dozen degrees apart on top of the size differences.
BlobParams params_at(const SynthConfig& cfg, double t) {
    const double phi = 2.0 * std::numbers::pi * t / cfg.num_classes;
    BlobParams p;
    p.theta = (2.5 * std::numbers::pi - 0.18) * t;
    p.sig_major = 0.14 + 0.015 * std::cos(phi);
    p.sig_minor = 0.045 + 0.006 * std::sin(phi);
    return p;
}

Tensor render_sample(const SynthConfig& cfg, int cls, int mode, Rng& rng) {
    const BlobParams base = params_at(cfg, mode_position(cfg, cls, mode));
    const double cx = 0.5 + 0.04 * rng.uniform(-1.0, 1.0);
    const double cy = 0.5 + 0.04 * rng.uniform(-1.0, 1.0);
    const double theta = base.theta + 0.05 * rng.uniform(-1.0, 1.0);
    const double size_jitter = 1.0 + 0.06 * rng.uniform(-1.0, 1.0);
    const double amp = 0.8 + 0.06 * rng.uniform(-1.0, 1.0);

    const double sig_major = base.sig_major * size_jitter;
    const double sig_minor = base.sig_minor * size_jitter;
    const double ct = std::cos(theta), st = std::sin(theta);
    const int s = cfg.image_size;

    Tensor img = Tensor::zeros({s, s, 1});
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            const double nx = (x + 0.5) / s - cx;
            const double ny = (y + 0.5) / s - cy;
            const double u = ct * nx + st * ny;
            const double w = -st * nx + ct * ny;
            double v = amp * std::exp(-0.5 * (u * u / (sig_major * sig_major) +
                                              w * w / (sig_minor * sig_minor)));
            if (cfg.speckle_sigma > 0.0) v *= 1.0 + cfg.speckle_sigma * rng.normal();
            img.at(y, x, 0) = std::min(1.0, std::max(0.0, v));
        }
    return img;
}

int mode_of_sample(const SynthConfig& cfg, int k) {
    // Sub-populations inside a class fall off geometrically: mode 0 is the
    // common variant, later modes (the ones stretched toward the next class)
    // are progressively rarer. Sample index ranges are carved by cumulative
    // weight so any prefix of a class is close to the target mixture.
    const int m = cfg.modes_per_class;
    if (m == 1) return 0;
    const double total = static_cast<double>((1 << m) - 1);
    double cum = 0.0;
    for (int mode = 0; mode < m - 1; ++mode) {
        cum += static_cast<double>(1 << (m - 1 - mode)) / total;
        if (k < static_cast<int>(cum * cfg.samples_per_class)) return mode;
    }
    return m - 1;
}

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.num_classes = cfg.num_classes;
    ds.image_size = cfg.image_size;
    ds.samples.reserve(static_cast<std::size_t>(cfg.num_classes) *
                       static_cast<std::size_t>(cfg.samples_per_class));
    for (int c = 0; c < cfg.num_classes; ++c)
        for (int k = 0; k < cfg.samples_per_class; ++k) {
            const int mode = mode_of_sample(cfg, k);
            Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(c),
                                static_cast<std::uint64_t>(k)));
            Sample sample;
            sample.image = render_sample(cfg, c, mode, rng);
            sample.label = c;
            sample.source = "synth:c" + std::to_string(c) + ":m" + std::to_string(mode);
            ds.samples.push_back(std::move(sample));
        }
    return ds;
}

Tensor resize_bilinear(const Tensor& img, int target) {
    if (img.rank() != 3 || img.shape[2] != 1)
        throw ShapeError("resize_bilinear expects [h x w x 1], got " + img.shape_str());
    if (target < 1) throw ConfigError("resize target must be positive");
    const int h = img.shape[0], w = img.shape[1];
    if (h == target && w == target) return Tensor::of(img.shape, img.data);

    Tensor out = Tensor::zeros({target, target, 1});
    const double sy = static_cast<double>(h) / target;
    const double sx = static_cast<double>(w) / target;
    for (int i = 0; i < target; ++i) {
        double fy = (i + 0.5) * sy - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int j = 0; j < target; ++j) {
            double fx = (j + 0.5) * sx - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            const double top = (1.0 - wx) * img.at(y0, x0, 0) + wx * img.at(y0, x1, 0);
            const double bot = (1.0 - wx) * img.at(y1, x0, 0) + wx * img.at(y1, x1, 0);
            out.at(i, j, 0) = (1.0 - wy) * top + wy * bot;
        }
    }
    return out;
}

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".pgm";
}

}  // namespace

Dataset load_dir(const std::string& root, int image_size) {
    if (!fs::is_directory(root)) throw DataError(root + " is not a directory");

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw DataError(root + " contains no class directories");

    Dataset ds;
    ds.num_classes = static_cast<int>(class_dirs.size());
    ds.image_size = image_size;
    for (std::size_t c = 0; c < class_dirs.size(); ++c) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dirs[c]))
            if (entry.is_regular_file() && has_image_extension(entry.path()))
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw DataError("class directory " + class_dirs[c].string() + " has no images");
        for (const fs::path& f : files) {
            Sample sample;
            sample.image = resize_bilinear(read_image(f.string()), image_size);
            sample.label = static_cast<int>(c);
            sample.source = f.string();
            ds.samples.push_back(std::move(sample));
        }
    }
    return ds;
}

Dataset augment_resample(const Dataset& ds, int per_class_target, std::uint64_t seed) {
    if (per_class_target < 1) throw ConfigError("per-class target must be positive");
    std::vector<std::vector<std::size_t>> by_class(
        static_cast<std::size_t>(ds.num_classes));
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const int label = ds.samples[i].label;
        if (label < 0 || label >= ds.num_classes)
            throw DataError("sample " + std::to_string(i) + " has out-of-range label " +
                            std::to_string(label));
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }

    Rng rng(derive_seed(seed, "augment"));
    Dataset out;
    out.num_classes = ds.num_classes;
    out.image_size = ds.image_size;
    for (int c = 0; c < ds.num_classes; ++c) {
        const auto& idx = by_class[static_cast<std::size_t>(c)];
        if (idx.empty())
            throw DataError("class " + std::to_string(c) + " has no samples to resample");
        const int n = static_cast<int>(idx.size());
        if (n <= per_class_target) {
            // keep all originals, pad with uniform redraws
            for (std::size_t i : idx) out.samples.push_back(ds.samples[i]);
            for (int k = n; k < per_class_target; ++k)
                out.samples.push_back(ds.samples[idx[rng.uniform_int(n)]]);
        } else {
            // without-replacement subset via a partial Fisher-Yates pass
            std::vector<std::size_t> pool = idx;
            for (int k = 0; k < per_class_target; ++k) {
                const int pick = k + rng.uniform_int(static_cast<int>(pool.size()) - k);
                std::swap(pool[static_cast<std::size_t>(k)],
                          pool[static_cast<std::size_t>(pick)]);
                out.samples.push_back(ds.samples[pool[static_cast<std::size_t>(k)]]);
            }
        }
    }
    return out;
}

void export_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    std::vector<int> counter(static_cast<std::size_t>(ds.num_classes), 0);
    for (const Sample& sample : ds.samples) {
        char cls[16], name[24];
        std::snprintf(cls, sizeof cls, "class_%02d", sample.label);
        const fs::path class_dir = fs::path(dir) / cls;
        fs::create_directories(class_dir);
        std::snprintf(name, sizeof name, "sample_%05d.pgm",
                      counter[static_cast<std::size_t>(sample.label)]++);
        write_pgm((class_dir / name).string(), sample.image);
    }
}

std::string dataset_hash(const Dataset& ds) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a offset basis
    auto mix_bytes = [&h](const void* p, std::size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    const std::int64_t meta[2] = {ds.num_classes, ds.image_size};
    mix_bytes(meta, sizeof meta);
    for (const Sample& sample : ds.samples) {
        const std::int64_t label = sample.label;
        mix_bytes(&label, sizeof label);
        mix_bytes(sample.image.data.data(), sample.image.data.size() * sizeof(double));
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

}  // namespace sfdmc
