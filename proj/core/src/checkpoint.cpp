#include "siglab/checkpoint.hpp"

#include "siglab/config.hpp"
#include "siglab/errors.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

namespace siglab {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t take_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw ParseError("checkpoint: truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

} // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Eigen::MatrixXd*>>& tensors) {
    nlohmann::json manifest;
    manifest["tensors"] = nlohmann::json::array();
    for (const auto& [name, m] : tensors)
        manifest["tensors"].push_back(
            {{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
    std::string mtxt = manifest.dump();

    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(mtxt.size()));
    out += mtxt;
    for (const auto& [name, m] : tensors)
        out.append(reinterpret_cast<const char*>(m->data()),
                   static_cast<std::size_t>(m->size()) * sizeof(double));
    write_file_atomic(path, out);
}

void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Eigen::MatrixXd*>>& tensors) {
    std::string in = read_file(path);
    std::size_t pos = 0;
    if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
        throw ParseError("checkpoint: bad magic in " + path);
    pos += sizeof(kMagic);
    std::uint32_t version = take_u32(in, pos);
    if (version != kVersion)
        throw ParseError("checkpoint: unsupported version in " + path);
    std::uint32_t mlen = take_u32(in, pos);
    if (pos + mlen > in.size()) throw ParseError("checkpoint: truncated manifest");
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in.substr(pos, mlen));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint: manifest: ") + e.what());
    }
    pos += mlen;

    struct Slot {
        Eigen::Index rows, cols;
        std::size_t offset;
    };
    std::map<std::string, Slot> slots;
    std::size_t payload = pos;
    for (const auto& t : manifest.at("tensors")) {
        Slot s{t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>(), payload};
        payload += static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols) *
                   sizeof(double);
        if (!slots.emplace(t.at("name").get<std::string>(), s).second)
            throw ParseError("checkpoint: duplicate tensor name");
    }
    if (payload != in.size()) throw ParseError("checkpoint: payload size mismatch");

    if (slots.size() != tensors.size())
        throw ValidationError("checkpoint: tensor set does not match the architecture");
    for (const auto& [name, m] : tensors) {
        auto it = slots.find(name);
        if (it == slots.end())
            throw ValidationError("checkpoint: missing tensor " + name);
        const Slot& s = it->second;
        if (s.rows != m->rows() || s.cols != m->cols())
            throw ValidationError("checkpoint: shape mismatch for " + name);
        std::memcpy(m->data(), in.data() + s.offset,
                    static_cast<std::size_t>(m->size()) * sizeof(double));
    }
}

} // namespace siglab
