#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "sfdmc/data.hpp"
#include "sfdmc/errors.hpp"
#include "sfdmc/image_io.hpp"
#include "sfdmc/rng.hpp"

using namespace sfdmc;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
    fs::path path;
    ScratchDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("sfdmc_data_test_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

double image_dist(const Tensor& a, const Tensor& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double diff = a.data[i] - b.data[i];
        d += diff * diff;
    }
    return std::sqrt(d);
}

// mean image per key selected by `key(sample)`
template <typename KeyFn>
std::map<std::string, Tensor> mean_images(const Dataset& ds, KeyFn key) {
    std::map<std::string, Tensor> sums;
    std::map<std::string, int> counts;
    for (const Sample& s : ds.samples) {
        const std::string k = key(s);
        auto it = sums.find(k);
        if (it == sums.end()) {
            sums.emplace(k, s.image);
            counts[k] = 1;
        } else {
            for (std::size_t i = 0; i < s.image.data.size(); ++i)
                it->second.data[i] += s.image.data[i];
            ++counts[k];
        }
    }
    for (auto& [k, t] : sums)
        for (double& v : t.data) v /= counts[k];
    return sums;
}

// forward PNG row filtering, the inverse of what the reader undoes
std::vector<unsigned char> filter_rows(const std::vector<unsigned char>& px, int w, int h,
                                       const std::vector<int>& row_filters) {
    auto at = [&](int y, int x) -> int {
        return (y < 0 || x < 0) ? 0 : px[static_cast<std::size_t>(y) * w + x];
    };
    std::vector<unsigned char> out;
    for (int y = 0; y < h; ++y) {
        const int f = row_filters[static_cast<std::size_t>(y)];
        out.push_back(static_cast<unsigned char>(f));
        for (int x = 0; x < w; ++x) {
            const int cur = at(y, x), a = at(y, x - 1), b = at(y - 1, x), c = at(y - 1, x - 1);
            int pred = 0;
            switch (f) {
                case 0: pred = 0; break;
                case 1: pred = a; break;
                case 2: pred = b; break;
                case 3: pred = (a + b) / 2; break;
                case 4: {
                    const int p = a + b - c;
                    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                    pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
                    break;
                }
            }
            out.push_back(static_cast<unsigned char>((cur - pred) & 0xff));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("separated noise-free single-mode classes are nearest-template separable") {
    SynthConfig cfg;
    cfg.num_classes = 3;
    cfg.modes_per_class = 1;
    cfg.inter_class_overlap = 0.0;
    cfg.speckle_sigma = 0.0;
    cfg.image_size = 32;
    cfg.samples_per_class = 30;
    cfg.seed = 5;
    Dataset train = synth_generate(cfg);
    cfg.seed = 6;
    Dataset test = synth_generate(cfg);

    auto templates = mean_images(train, [](const Sample& s) { return std::to_string(s.label); });
    int correct = 0;
    for (const Sample& s : test.samples) {
        int best = -1;
        double best_d = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double d = image_dist(s.image, templates.at(std::to_string(c)));
            if (best < 0 || d < best_d) {
                best = c;
                best_d = d;
            }
        }
        if (best == s.label) ++correct;
    }
    CHECK(correct == static_cast<int>(test.samples.size()));
}

TEST_CASE("overlapped modes put more variance inside a class than between neighbors") {
    SynthConfig cfg;  // defaults: 3 classes, 2 modes, overlap 0.6, speckle 0.15
    cfg.samples_per_class = 60;
    cfg.seed = 7;
    Dataset ds = synth_generate(cfg);

    auto modes = mean_images(ds, [](const Sample& s) { return s.source; });
    REQUIRE(modes.size() == 6);
    for (int c = 0; c < 3; ++c) {
        const Tensor& m0 = modes.at("synth:c" + std::to_string(c) + ":m0");
        const Tensor& m1 = modes.at("synth:c" + std::to_string(c) + ":m1");
        const double within = image_dist(m0, m1);
        double cross = 1e300;
        for (int other = 0; other < 3; ++other) {
            if (other == c) continue;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    const Tensor& a =
                        modes.at("synth:c" + std::to_string(c) + ":m" + std::to_string(i));
                    const Tensor& b =
                        modes.at("synth:c" + std::to_string(other) + ":m" + std::to_string(j));
                    cross = std::min(cross, image_dist(a, b));
                }
        }
        CHECK(within > cross);
    }
}

TEST_CASE("generation is deterministic, balanced and bounded") {
    SynthConfig cfg;
    cfg.samples_per_class = 10;
    cfg.seed = 8;
    Dataset a = synth_generate(cfg);
    Dataset b = synth_generate(cfg);
    REQUIRE(a.samples.size() == 30);
    std::vector<int> counts(3, 0);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].image.data == b.samples[i].image.data);
        CHECK(a.samples[i].label == b.samples[i].label);
        ++counts[static_cast<std::size_t>(a.samples[i].label)];
        for (double v : a.samples[i].image.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    CHECK(counts == std::vector<int>{10, 10, 10});

    cfg.seed = 9;
    Dataset c = synth_generate(cfg);
    CHECK(a.samples[0].image.data != c.samples[0].image.data);
    CHECK(dataset_hash(a) == dataset_hash(b));
    CHECK(dataset_hash(a) != dataset_hash(c));
}

TEST_CASE("mode mixture is weighted toward the common variant") {
    SynthConfig cfg;  // 2 modes: weights 2/3 and 1/3
    cfg.samples_per_class = 6;
    cfg.seed = 2;
    Dataset ds = synth_generate(cfg);
    for (int k = 0; k < 4; ++k)
        CHECK(ds.samples[static_cast<std::size_t>(k)].source == "synth:c0:m0");
    CHECK(ds.samples[4].source == "synth:c0:m1");
    CHECK(ds.samples[5].source == "synth:c0:m1");
    CHECK(ds.samples[6].source == "synth:c1:m0");

    // every mode is populated once a class has a handful of samples
    cfg.modes_per_class = 3;
    cfg.samples_per_class = 14;  // weights 4/7, 2/7, 1/7
    Dataset wide = synth_generate(cfg);
    int counts[3] = {0, 0, 0};
    for (const Sample& s : wide.samples)
        if (s.label == 0) ++counts[s.source.back() - '0'];
    CHECK(counts[0] == 8);
    CHECK(counts[1] == 4);
    CHECK(counts[2] == 2);
}

TEST_CASE("synthetic config validation rejects bad fields") {
    SynthConfig cfg;
    cfg.num_classes = 1;
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
    cfg = {};
    cfg.modes_per_class = 0;
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
    cfg = {};
    cfg.inter_class_overlap = 1.5;
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
    cfg = {};
    cfg.speckle_sigma = -0.1;
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
    cfg = {};
    cfg.image_size = 4;
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
    cfg = {};
    cfg.samples_per_class = 0;
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
}

TEST_CASE("resize to the same size is bit-identical") {
    Rng rng(11);
    Tensor img = Tensor::zeros({7, 7, 1});
    for (double& v : img.data) v = rng.uniform();
    Tensor out = resize_bilinear(img, 7);
    CHECK(out.data == img.data);
}

TEST_CASE("resize preserves constants and stays inside the input range") {
    Tensor flat = Tensor::full({5, 5, 1}, 0.37);
    Tensor up = resize_bilinear(flat, 9);
    for (double v : up.data) CHECK(std::abs(v - 0.37) <= 1e-12);

    Rng rng(12);
    Tensor img = Tensor::zeros({6, 6, 1});
    for (double& v : img.data) v = rng.uniform();
    const double lo = *std::min_element(img.data.begin(), img.data.end());
    const double hi = *std::max_element(img.data.begin(), img.data.end());
    for (int target : {3, 11}) {
        Tensor r = resize_bilinear(img, target);
        for (double v : r.data) {
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
    }
}

TEST_CASE("2x2 to 4x4 resize matches the hand-computed grid") {
    Tensor img = Tensor::of({2, 2, 1}, {0.0, 1.0, 2.0, 3.0});
    Tensor out = resize_bilinear(img, 4);
    const double want[4][4] = {{0.0, 0.25, 0.75, 1.0},
                               {0.5, 0.75, 1.25, 1.5},
                               {1.5, 1.75, 2.25, 2.5},
                               {2.0, 2.25, 2.75, 3.0}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(out.at(i, j, 0) == doctest::Approx(want[i][j]).epsilon(1e-12));
}

TEST_CASE("gradient image upsample matches an independent interpolation oracle") {
    Tensor img = Tensor::zeros({4, 4, 1});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) img.at(y, x, 0) = (y * 4 + x) / 15.0;
    Tensor out = resize_bilinear(img, 8);

    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            auto src = [](int o) {
                double f = (o + 0.5) * 0.5 - 0.5;
                return std::min(std::max(f, 0.0), 3.0);
            };
            const double fy = src(i), fx = src(j);
            const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
            const int y1 = std::min(y0 + 1, 3), x1 = std::min(x0 + 1, 3);
            const double wy = fy - y0, wx = fx - x0;
            const double want = (1 - wy) * ((1 - wx) * img.at(y0, x0, 0) + wx * img.at(y0, x1, 0)) +
                                wy * ((1 - wx) * img.at(y1, x0, 0) + wx * img.at(y1, x1, 0));
            CHECK(out.at(i, j, 0) == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("pgm write/read round trip is exact on the 255-level grid") {
    ScratchDir tmp;
    Tensor img = Tensor::zeros({3, 5, 1});
    for (int i = 0; i < 15; ++i) img.data[static_cast<std::size_t>(i)] = (i * 17 % 256) / 255.0;
    const std::string path = (tmp.path / "a.pgm").string();
    write_pgm(path, img);
    Tensor back = read_pgm(path);
    CHECK(back.shape == img.shape);
    CHECK(back.data == img.data);

    // out-of-range values clamp on write
    Tensor wild = Tensor::of({1, 2, 1}, {-0.5, 1.5});
    write_pgm(path, wild);
    Tensor clamped = read_pgm(path);
    CHECK(clamped.data == std::vector<double>{0.0, 1.0});
}

TEST_CASE("pgm reader handles comments and rejects malformed files") {
    ScratchDir tmp;
    const std::string path = (tmp.path / "c.pgm").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n# a comment\n4 3\n255\n";
        for (int i = 0; i < 12; ++i) out.put(static_cast<char>(i * 20));
    }
    Tensor img = read_pgm(path);
    CHECK(img.shape == std::vector<int>{3, 4, 1});
    CHECK(img.at(1, 1, 0) == doctest::Approx(100.0 / 255.0));

    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n2 2\n65535\n";
        for (int i = 0; i < 8; ++i) out.put(1);
    }
    CHECK_THROWS_AS(read_pgm(path), DataError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n4 4\n255\n";
        out.put(0);  // far too few pixel bytes
    }
    CHECK_THROWS_AS(read_pgm(path), DataError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "P2\n2 2\n255\n0 0 0 0\n";
    }
    CHECK_THROWS_AS(read_pgm(path), DataError);
    CHECK_THROWS_AS(read_pgm((tmp.path / "missing.pgm").string()), DataError);
}

TEST_CASE("png round trip through the gray8 writer") {
    ScratchDir tmp;
    Rng rng(13);
    const int w = 12, h = 9;
    std::vector<unsigned char> px(static_cast<std::size_t>(w) * h);
    for (auto& b : px) b = static_cast<unsigned char>(rng.uniform_int(256));
    const std::string path = (tmp.path / "img.png").string();
    detail::write_png_gray8(path, px, w, h);

    Tensor img = read_png(path);
    REQUIRE(img.shape == std::vector<int>{h, w, 1});
    for (std::size_t i = 0; i < px.size(); ++i)
        CHECK(img.data[i] == doctest::Approx(px[i] / 255.0));

    // sniffing ignores the extension
    const std::string lying = (tmp.path / "img.pgm").string();
    fs::copy_file(path, lying);
    CHECK(read_image(lying).data == img.data);
}

TEST_CASE("png reader undoes every filter type") {
    ScratchDir tmp;
    Rng rng(14);
    const int w = 8, h = 5;
    std::vector<unsigned char> px(static_cast<std::size_t>(w) * h);
    for (auto& b : px) b = static_cast<unsigned char>(rng.uniform_int(256));

    for (int f = 0; f <= 4; ++f) {
        const std::string path = (tmp.path / ("f" + std::to_string(f) + ".png")).string();
        detail::write_png_custom(path, w, h, 0, 8,
                                 filter_rows(px, w, h, std::vector<int>(h, f)));
        Tensor img = read_png(path);
        for (std::size_t i = 0; i < px.size(); ++i)
            CHECK(img.data[i] == doctest::Approx(px[i] / 255.0));
    }

    // mixed filters, one per row
    const std::string path = (tmp.path / "mixed.png").string();
    detail::write_png_custom(path, w, h, 0, 8, filter_rows(px, w, h, {4, 3, 2, 1, 0}));
    Tensor img = read_png(path);
    for (std::size_t i = 0; i < px.size(); ++i)
        CHECK(img.data[i] == doctest::Approx(px[i] / 255.0));
}

TEST_CASE("png reader rejects corruption and non-grayscale formats") {
    ScratchDir tmp;
    const int w = 6, h = 4;
    std::vector<unsigned char> px(static_cast<std::size_t>(w) * h, 128);
    const std::string good = (tmp.path / "good.png").string();
    detail::write_png_gray8(good, px, w, h);

    // flip a byte inside the IDAT payload
    {
        std::ifstream in(good, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        bytes[bytes.size() - 20] ^= 0x40;
        const std::string bad = (tmp.path / "bad_crc.png").string();
        std::ofstream out(bad, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_WITH_AS(read_png(bad), doctest::Contains("CRC"), DataError);
    }

    // RGB: three bytes per pixel, color type 2
    {
        std::vector<unsigned char> rgb(static_cast<std::size_t>(w) * h * 3, 10);
        std::vector<unsigned char> rows;
        for (int y = 0; y < h; ++y) {
            rows.push_back(0);
            for (int x = 0; x < w * 3; ++x)
                rows.push_back(rgb[static_cast<std::size_t>(y) * w * 3 + x]);
        }
        const std::string color = (tmp.path / "color.png").string();
        detail::write_png_custom(color, w, h, 2, 8, rows);
        CHECK_THROWS_WITH_AS(read_png(color), doctest::Contains("grayscale"), DataError);
    }

    // truncated tail
    {
        std::ifstream in(good, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        const std::string cut = (tmp.path / "cut.png").string();
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_AS(read_png(cut), DataError);
    }

    const std::string junk = (tmp.path / "junk.png").string();
    {
        std::ofstream out(junk, std::ios::binary);
        out << "hello";
    }
    CHECK_THROWS_AS(read_png(junk), DataError);
    CHECK_THROWS_AS(read_image(junk), DataError);
}

TEST_CASE("load_dir assigns labels by sorted directory name") {
    ScratchDir tmp;
    fs::create_directories(tmp.path / "beta");
    fs::create_directories(tmp.path / "alpha");
    Tensor img = Tensor::full({4, 4, 1}, 0.5);
    for (int i = 0; i < 3; ++i) {
        write_pgm((tmp.path / "alpha" / ("a" + std::to_string(i) + ".pgm")).string(), img);
        write_pgm((tmp.path / "beta" / ("b" + std::to_string(i) + ".pgm")).string(), img);
    }
    std::ofstream(tmp.path / "beta" / "notes.txt") << "ignored";

    Dataset ds = load_dir(tmp.path.string(), 8);
    REQUIRE(ds.samples.size() == 6);
    CHECK(ds.num_classes == 2);
    CHECK(ds.image_size == 8);
    for (int i = 0; i < 3; ++i) {
        CHECK(ds.samples[static_cast<std::size_t>(i)].label == 0);      // alpha
        CHECK(ds.samples[static_cast<std::size_t>(i + 3)].label == 1);  // beta
    }
    CHECK(ds.samples[0].image.shape == std::vector<int>{8, 8, 1});
    // 0.5 quantizes to 128/255 in the PGM on disk
    for (double v : ds.samples[0].image.data) CHECK(v == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("load_dir error cases") {
    ScratchDir tmp;
    CHECK_THROWS_AS(load_dir((tmp.path / "nope").string(), 8), DataError);
    CHECK_THROWS_AS(load_dir(tmp.path.string(), 8), DataError);  // no class dirs

    fs::create_directories(tmp.path / "empty_class");
    CHECK_THROWS_AS(load_dir(tmp.path.string(), 8), DataError);
}

TEST_CASE("export then load round trips labels and pixels") {
    ScratchDir tmp;
    SynthConfig cfg;
    cfg.num_classes = 2;
    cfg.modes_per_class = 1;
    cfg.image_size = 16;
    cfg.samples_per_class = 4;
    cfg.seed = 15;
    Dataset ds = synth_generate(cfg);
    export_dataset(ds, tmp.path.string());

    Dataset back = load_dir(tmp.path.string(), 16);
    REQUIRE(back.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].label == ds.samples[i].label);
        double worst = 0.0;
        for (std::size_t p = 0; p < ds.samples[i].image.data.size(); ++p)
            worst = std::max(worst, std::abs(back.samples[i].image.data[p] -
                                             ds.samples[i].image.data[p]));
        CHECK(worst <= 0.5 / 255.0 + 1e-12);  // one quantization step
    }
}

TEST_CASE("augmentation keeps all originals when growing a class") {
    SynthConfig cfg;
    cfg.samples_per_class = 40;
    cfg.seed = 16;
    Dataset ds = synth_generate(cfg);
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        ds.samples[i].source += ":#" + std::to_string(i);  // make every sample unique

    Dataset grown = augment_resample(ds, 200, 21);
    REQUIRE(grown.samples.size() == 600);
    std::vector<int> counts(3, 0);
    std::set<std::string> seen;
    for (const Sample& s : grown.samples) {
        ++counts[static_cast<std::size_t>(s.label)];
        seen.insert(s.source);
    }
    CHECK(counts == std::vector<int>{200, 200, 200});
    CHECK(seen.size() == ds.samples.size());  // every original still present

    Dataset again = augment_resample(ds, 200, 21);
    for (std::size_t i = 0; i < grown.samples.size(); ++i)
        CHECK(again.samples[i].source == grown.samples[i].source);
    Dataset other = augment_resample(ds, 200, 22);
    bool same = true;
    for (std::size_t i = 0; i < grown.samples.size() && same; ++i)
        same = other.samples[i].source == grown.samples[i].source;
    CHECK(!same);
}

TEST_CASE("augmentation at the exact class size is the identity") {
    SynthConfig cfg;
    cfg.samples_per_class = 5;
    cfg.seed = 17;
    Dataset ds = synth_generate(cfg);
    Dataset same = augment_resample(ds, 5, 3);
    REQUIRE(same.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(same.samples[i].source == ds.samples[i].source);
        CHECK(same.samples[i].image.data == ds.samples[i].image.data);
    }
}

TEST_CASE("downsampling keeps a distinct without-replacement subset") {
    SynthConfig cfg;
    cfg.samples_per_class = 10;
    cfg.seed = 18;
    Dataset ds = synth_generate(cfg);
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        ds.samples[i].source += ":#" + std::to_string(i);

    Dataset small = augment_resample(ds, 4, 9);
    REQUIRE(small.samples.size() == 12);
    std::set<std::string> originals;
    for (const Sample& s : ds.samples) originals.insert(s.source);
    std::set<std::string> picked;
    for (const Sample& s : small.samples) {
        CHECK(originals.count(s.source) == 1);
        CHECK(picked.insert(s.source).second);  // no duplicates
    }
}

TEST_CASE("with-replacement padding draws uniformly over the originals") {
    SynthConfig cfg;
    cfg.num_classes = 2;
    cfg.samples_per_class = 3;
    cfg.image_size = 8;
    cfg.seed = 19;
    Dataset ds = synth_generate(cfg);
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        ds.samples[i].source = "#" + std::to_string(i);

    std::map<std::string, long> totals;
    for (int seed = 0; seed < 100; ++seed) {
        Dataset grown = augment_resample(ds, 9, static_cast<std::uint64_t>(seed));
        std::map<std::string, int> counts;
        for (const Sample& s : grown.samples) ++counts[s.source];
        for (const auto& [src, n] : counts) {
            CHECK(n >= 1);  // originals always retained
            totals[src] += n;
        }
    }
    REQUIRE(totals.size() == 6);
    for (const auto& [src, total] : totals) {
        const double mean = total / 100.0;
        CHECK(mean > 2.5);
        CHECK(mean < 3.5);
    }
}

TEST_CASE("augmentation rejects a class with no samples") {
    SynthConfig cfg;
    cfg.num_classes = 2;
    cfg.samples_per_class = 3;
    cfg.image_size = 8;
    cfg.seed = 20;
    Dataset ds = synth_generate(cfg);
    ds.num_classes = 3;  // claim a class that has no members
    CHECK_THROWS_AS(augment_resample(ds, 5, 1), DataError);
}

TEST_CASE("dataset_hash reacts to content and order changes") {
    SynthConfig cfg;
    cfg.num_classes = 2;
    cfg.samples_per_class = 3;
    cfg.image_size = 8;
    cfg.seed = 23;
    Dataset ds = synth_generate(cfg);
    const std::string base = dataset_hash(ds);
    CHECK(base.size() == 16);

    Dataset tweaked = ds;
    tweaked.samples[0].image.data[10] += 1e-9;
    CHECK(dataset_hash(tweaked) != base);

    Dataset swapped = ds;
    std::swap(swapped.samples[0], swapped.samples[1]);
    CHECK(dataset_hash(swapped) != base);
}
