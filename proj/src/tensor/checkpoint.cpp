#include "ntnpred/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "ntnpred/errors.hpp"
#include "ntnpred/io.hpp"

namespace ntnpred {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'N', 'T', 'N', 'P', 'C', 'K', 'P', '1'};

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
    return v;
}

void put_doubles(std::string& out, const std::vector<double>& v) {
    for (double d : v) put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct Writer {
    std::string blob;
    std::uint64_t count = 0;

    json add(const std::vector<double>& v, const Shape& shape) {
        json j{{"offset", count}, {"shape", shape}};
        put_doubles(blob, v);
        count += v.size();
        return j;
    }
};

}  // namespace

json layer_spec_to_json(const LayerSpec& s) {
    return json{{"name", s.name},
                {"kind", std::string(to_string(s.kind))},
                {"filters_or_units", s.filters_or_units},
                {"kernel", {s.kernel.freq, s.kernel.time}},
                {"stride", {s.stride.freq, s.stride.time}},
                {"pad_or_crop", {s.pad_or_crop.top, s.pad_or_crop.bottom, s.pad_or_crop.left, s.pad_or_crop.right}},
                {"activation", std::string(to_string(s.activation))}};
}

LayerSpec layer_spec_from_json(const json& j) {
    try {
        LayerSpec s;
        s.name = j.value("name", std::string{});
        s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
        s.filters_or_units = j.value("filters_or_units", std::size_t{1});
        if (j.contains("kernel")) s.kernel = {j["kernel"].at(0).get<std::size_t>(), j["kernel"].at(1).get<std::size_t>()};
        if (j.contains("stride")) s.stride = {j["stride"].at(0).get<std::size_t>(), j["stride"].at(1).get<std::size_t>()};
        if (j.contains("pad_or_crop")) {
            const auto& p = j["pad_or_crop"];
            s.pad_or_crop = {p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>(), p.at(2).get<std::size_t>(),
                             p.at(3).get<std::size_t>()};
        }
        s.activation = activation_from_string(j.value("activation", std::string("None")));
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("layer spec: ") + e.what());
    }
}

json architecture_fingerprint(const std::vector<LayerSpec>& arch) {
    json a = json::array();
    for (const auto& s : arch) a.push_back(layer_spec_to_json(s));
    return a;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    Writer w;
    json params = json::array();
    for (const auto& g : ck.params.groups()) {
        json tensors = json::array();
        for (std::size_t i = 0; i < g.tensors.size(); ++i) {
            json t = w.add(g.tensors[i].values(), g.tensors[i].shape());
            t["name"] = g.names[i];
            tensors.push_back(t);
        }
        params.push_back({{"layer", g.layer}, {"counted", g.counted}, {"tensors", tensors}});
    }
    json buffers = json::array();
    for (const auto& g : ck.params.buffer_groups()) {
        json tensors = json::array();
        for (std::size_t i = 0; i < g.tensors.size(); ++i) {
            json t = w.add(g.tensors[i].values(), g.tensors[i].shape());
            t["name"] = g.names[i];
            tensors.push_back(t);
        }
        buffers.push_back({{"layer", g.layer}, {"tensors", tensors}});
    }
    json moments = json::array();
    const auto& m1 = ck.optimizer.first_moments();
    const auto& m2 = ck.optimizer.second_moments();
    for (std::size_t i = 0; i < m1.size(); ++i) {
        json e{{"m", w.add(m1[i], {m1[i].size()})}, {"v", w.add(m2[i], {m2[i].size()})}};
        moments.push_back(e);
    }

    json manifest{{"format", "ntnpred-checkpoint"},
                  {"version", 1},
                  {"byte_order", "little-endian"},
                  {"scalar", "float64"},
                  {"architecture", architecture_fingerprint(ck.architecture)},
                  {"parameters", params},
                  {"buffers", buffers},
                  {"optimizer", {{"kind", "adam"}, {"steps", ck.optimizer.steps()}, {"moments", moments}}},
                  {"rng_seed", ck.params.rng_seed},
                  {"epoch", ck.epoch},
                  {"total_scalars", w.count},
                  {"metadata", ck.metadata}};
    const std::string text = manifest.dump(2) + "\n";

    std::string blob(kMagic, sizeof kMagic);
    put_u64(blob, fnv1a(text));
    put_u64(blob, w.count);
    blob += w.blob;

    std::filesystem::path mpath = path;
    mpath += ".json";
    write_file_atomic(path, blob);
    write_file_atomic(mpath, text);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::filesystem::path mpath = path;
    mpath += ".json";
    std::string blob, text;
    try {
        blob = read_file(path);
        text = read_file(mpath);
    } catch (const std::exception& e) {
        throw CheckpointMismatch(std::string("checkpoint: ") + e.what());
    }
    if (blob.size() < 24 || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0)
        throw CheckpointMismatch("checkpoint: bad magic in " + path.string());
    if (get_u64(blob, 8) != fnv1a(text))
        throw CheckpointMismatch("checkpoint: manifest does not belong to blob " + path.string());
    const std::uint64_t count = get_u64(blob, 16);
    if (blob.size() != 24 + 8 * count) throw CheckpointMismatch("checkpoint: truncated blob " + path.string());

    auto read = [&](const json& t) {
        const auto off = t.at("offset").get<std::uint64_t>();
        const auto shape = t.at("shape").get<Shape>();
        const std::size_t n = shape_size(shape);
        if (off + n > count) throw CheckpointMismatch("checkpoint: tensor outside blob");
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = std::bit_cast<double>(get_u64(blob, 24 + 8 * (off + i)));
        return Tensor(shape, std::move(v));
    };

    Checkpoint ck;
    try {
        const json m = json::parse(text);
        for (const auto& s : m.at("architecture")) ck.architecture.push_back(layer_spec_from_json(s));
        for (const auto& g : m.at("parameters")) {
            const auto layer = g.at("layer").get<std::string>();
            ck.params.add_group(layer, g.at("counted").get<bool>());
            for (const auto& t : g.at("tensors")) ck.params.add(layer, t.at("name").get<std::string>(), read(t));
        }
        for (const auto& g : m.at("buffers")) {
            auto& grp = ck.params.add_buffer_group(g.at("layer").get<std::string>());
            for (const auto& t : g.at("tensors")) {
                grp.names.push_back(t.at("name").get<std::string>());
                grp.tensors.push_back(read(t));
            }
        }
        auto& m1 = ck.optimizer.first_moments();
        auto& m2 = ck.optimizer.second_moments();
        for (const auto& e : m.at("optimizer").at("moments")) {
            m1.push_back(read(e.at("m")).values());
            m2.push_back(read(e.at("v")).values());
        }
        ck.optimizer.set_steps(m.at("optimizer").at("steps").get<std::uint64_t>());
        ck.params.rng_seed = m.at("rng_seed").get<std::uint64_t>();
        ck.epoch = m.at("epoch").get<std::uint64_t>();
        ck.metadata = m.value("metadata", json::object());
    } catch (const json::exception& e) {
        throw CheckpointMismatch(std::string("checkpoint manifest: ") + e.what());
    }
    return ck;
}

}  // namespace ntnpred
