#include "sfdmc/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sfdmc/errors.hpp"

namespace sfdmc {

namespace {

constexpr char kMagic[8] = {'S', 'F', 'D', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_bytes(std::vector<unsigned char>& out, const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    out.insert(out.end(), b, b + n);
}

void put_array(std::vector<unsigned char>& out, const std::string& name, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    put_bytes(out, name.data(), name.size());
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u64(out, static_cast<std::uint64_t>(d));
    put_bytes(out, t.data.data(), t.data.size() * sizeof(double));
}

// bounds-checked sequential reader; any overrun means a truncated or
// inconsistent file that still had a valid CRC, which we call corrupt
struct Reader {
    const std::vector<unsigned char>& bytes;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            throw CheckpointError(CheckpointError::Kind::Corrupt,
                                  path + " ends mid-record");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(&bytes[pos]), n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const Model& model, long epoch, const std::string& rng_state,
                     const std::string& path) {
    std::vector<unsigned char> out;
    put_bytes(out, kMagic, sizeof kMagic);
    put_u32(out, kVersion);

    const std::string config = model.cfg.to_json_text();
    put_u32(out, static_cast<std::uint32_t>(config.size()));
    put_bytes(out, config.data(), config.size());
    put_u32(out, static_cast<std::uint32_t>(rng_state.size()));
    put_bytes(out, rng_state.data(), rng_state.size());
    put_u64(out, static_cast<std::uint64_t>(epoch));

    const std::vector<std::string>& names = model.extractor.param_names();
    const std::vector<Tensor>& params = model.extractor.params();
    put_u32(out, static_cast<std::uint32_t>(names.size() + 1));
    for (std::size_t i = 0; i < names.size(); ++i)
        put_array(out, "extractor." + names[i], params[i]);
    put_array(out, "mfcc.centers", model.bank.centers);

    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, out.data(), static_cast<uInt>(out.size())));
    put_u32(out, crc);

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw CheckpointError(CheckpointError::Kind::Corrupt, "cannot write " + tmp);
        f.write(reinterpret_cast<const char*>(out.data()),
                static_cast<std::streamsize>(out.size()));
        if (!f) throw CheckpointError(CheckpointError::Kind::Corrupt, "short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw CheckpointError(CheckpointError::Kind::Missing, "no checkpoint at " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < sizeof kMagic + 8)
        throw CheckpointError(CheckpointError::Kind::Corrupt, path + " is too short");
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
    const std::uint32_t actual = static_cast<std::uint32_t>(
        crc32(0L, bytes.data(), static_cast<uInt>(bytes.size() - 4)));
    if (stored != actual)
        throw CheckpointError(CheckpointError::Kind::Corrupt,
                              path + " failed its checksum (file damaged or truncated)");

    Reader r{bytes, 0, path};
    if (r.str(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
        throw CheckpointError(CheckpointError::Kind::Corrupt, path + " is not a checkpoint");
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                              path + " has format version " + std::to_string(version) +
                                  ", expected " + std::to_string(kVersion));

    const std::string config_text = r.str(r.u32());
    const std::string rng_state = r.str(r.u32());
    const long epoch = static_cast<long>(r.u64());

    RunConfig cfg;
    try {
        cfg = RunConfig::from_json_text(config_text);
    } catch (const ConfigError& e) {
        throw CheckpointError(CheckpointError::Kind::Corrupt,
                              path + " embeds an invalid config: " + e.what());
    }
    Model model = build_model(cfg);

    const std::uint32_t count = r.u32();
    std::size_t applied = 0;
    const std::vector<std::string>& names = model.extractor.param_names();
    std::vector<Tensor>& params = model.extractor.params();
    for (std::uint32_t a = 0; a < count; ++a) {
        const std::string name = r.str(r.u32());
        const std::uint32_t dims = r.u32();
        if (dims > 8)
            throw CheckpointError(CheckpointError::Kind::Corrupt,
                                  path + " array '" + name + "' has an absurd rank");
        std::vector<int> shape(dims);
        std::size_t count_vals = 1;
        for (std::uint32_t d = 0; d < dims; ++d) {
            shape[d] = static_cast<int>(r.u64());
            count_vals *= static_cast<std::size_t>(shape[d]);
        }
        r.need(count_vals * sizeof(double));

        Tensor* target = nullptr;
        if (name == "mfcc.centers") {
            target = &model.bank.centers;
        } else if (name.rfind("extractor.", 0) == 0) {
            const std::string base = name.substr(10);
            for (std::size_t i = 0; i < names.size(); ++i)
                if (names[i] == base) {
                    target = &params[i];
                    break;
                }
        }
        if (target == nullptr)
            throw CheckpointError(CheckpointError::Kind::Corrupt,
                                  path + " names unknown array '" + name + "'");
        if (target->shape != shape)
            throw CheckpointError(CheckpointError::Kind::Corrupt,
                                  path + " array '" + name + "' has the wrong shape");
        std::memcpy(target->data.data(), &bytes[r.pos], count_vals * sizeof(double));
        r.pos += count_vals * sizeof(double);
        ++applied;
    }
    if (applied != names.size() + 1)
        throw CheckpointError(CheckpointError::Kind::Corrupt,
                              path + " is missing parameter arrays");
    if (r.pos != bytes.size() - 4)
        throw CheckpointError(CheckpointError::Kind::Corrupt,
                              path + " has trailing bytes");

    return CheckpointData{std::move(model), epoch, rng_state};
}

}  // namespace sfdmc
