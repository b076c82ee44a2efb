#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mstm/core/bytes.hpp"
#include "mstm/nn/adam.hpp"
#include "mstm/nn/params.hpp"

namespace mstm::nn {

// Checkpoint layout (little-endian):
//   magic "MSTW", version byte 0x01,
//   ModelConfig as 9 u32 (fields, height, width, window, conv1_out,
//   conv2_out, kernel, lstm_hidden, lstm_layers),
//   u64 epoch, u64 adam step, u32 norm-stats CRC32, u32 tensor count,
//   per tensor: u32 name length, name bytes, u32 rank, rank x u32 dims,
//   f32 payload; trailing CRC32 over everything before it.

struct Checkpoint {
    ModelParams<float> params;
    AdamState<float> adam;
    bool has_adam = false;
    std::uint64_t epoch = 0;
    std::uint32_t norm_stats_crc = 0;
};

namespace checkpoint_detail {

constexpr char kMagic[4] = {'M', 'S', 'T', 'W'};
constexpr unsigned char kVersion = 0x01;

inline void put_tensor(std::ostream& os, const std::string& name, const Tensor<float>& t) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(os, static_cast<std::uint32_t>(d));
    put_f32_block(os, t.data(), t.size());
}

}  // namespace checkpoint_detail

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                            const AdamState<float>* adam, std::uint64_t epoch,
                            std::uint32_t norm_stats_crc) {
    using namespace checkpoint_detail;
    std::ostringstream body(std::ios::binary);
    body.write(kMagic, 4);
    body.put(static_cast<char>(kVersion));
    const ModelConfig& cfg = params.cfg;
    for (std::size_t v : {cfg.fields, cfg.height, cfg.width, cfg.window, cfg.conv1_out,
                          cfg.conv2_out, cfg.kernel, cfg.lstm_hidden, cfg.lstm_layers})
        put_u32(body, static_cast<std::uint32_t>(v));
    put_u64(body, epoch);
    put_u64(body, adam ? adam->step : 0);
    put_u32(body, norm_stats_crc);

    auto views = params.views();
    std::uint32_t count = static_cast<std::uint32_t>(views.size());
    if (adam) count *= 3;
    put_u32(body, count);
    for (const auto& v : views) put_tensor(body, v.name, *v.tensor);
    if (adam) {
        for (const auto& v : adam->m.views()) put_tensor(body, "adam.m." + v.name, *v.tensor);
        for (const auto& v : adam->v.views()) put_tensor(body, "adam.v." + v.name, *v.tensor);
    }

    const std::string bytes = body.str();
    const std::uint32_t crc = Crc32::of(bytes.data(), bytes.size());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    put_u32(os, crc);
    if (!os) throw std::runtime_error("checkpoint write failed: " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    using namespace checkpoint_detail;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 4 + 1 + 9 * 4 + 8 + 8 + 4 + 4 + 4)
        throw std::runtime_error("truncated checkpoint: " + path.string());

    const std::string body = bytes.substr(0, bytes.size() - 4);
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= std::uint32_t(static_cast<unsigned char>(bytes[bytes.size() - 4 + i])) << (8 * i);
    if (Crc32::of(body.data(), body.size()) != stored)
        throw std::runtime_error("checkpoint CRC mismatch: " + path.string());

    std::istringstream in(body, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    if (std::string_view(magic, 4) != std::string_view(kMagic, 4))
        throw std::runtime_error("bad checkpoint magic: " + path.string());
    if (in.get() != kVersion)
        throw std::runtime_error("unsupported checkpoint version: " + path.string());

    std::uint32_t dims[9];
    for (auto& d : dims)
        if (!get_u32(in, d)) throw std::runtime_error("truncated checkpoint header");
    ModelConfig cfg;
    cfg.fields = dims[0];
    cfg.height = dims[1];
    cfg.width = dims[2];
    cfg.window = dims[3];
    cfg.conv1_out = dims[4];
    cfg.conv2_out = dims[5];
    cfg.kernel = dims[6];
    cfg.lstm_hidden = dims[7];
    cfg.lstm_layers = dims[8];
    cfg.validate();

    Checkpoint ck;
    ck.params = ModelParams<float>::zeros_like(cfg);
    ck.adam = AdamState<float>::zeros_like(cfg);
    std::uint64_t adam_step;
    std::uint32_t n_tensors;
    if (!get_u64(in, ck.epoch) || !get_u64(in, adam_step) || !get_u32(in, ck.norm_stats_crc) ||
        !get_u32(in, n_tensors))
        throw std::runtime_error("truncated checkpoint header");
    ck.adam.step = adam_step;

    auto p_views = ck.params.views();
    auto m_views = ck.adam.m.views();
    auto v_views = ck.adam.v.views();
    auto find = [&](const std::string& name) -> Tensor<float>* {
        std::string_view n = name;
        std::vector<typename ModelParams<float>::View>* pool = &p_views;
        if (n.rfind("adam.m.", 0) == 0) {
            n.remove_prefix(7);
            pool = &m_views;
        } else if (n.rfind("adam.v.", 0) == 0) {
            n.remove_prefix(7);
            pool = &v_views;
        }
        for (auto& v : *pool)
            if (v.name == n) return v.tensor;
        return nullptr;
    };

    std::size_t adam_tensors = 0;
    for (std::uint32_t k = 0; k < n_tensors; ++k) {
        std::uint32_t name_len;
        if (!get_u32(in, name_len) || name_len > 4096)
            throw std::runtime_error("corrupt checkpoint tensor header");
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw std::runtime_error("truncated checkpoint");
        std::uint32_t rank;
        if (!get_u32(in, rank) || rank > 8) throw std::runtime_error("corrupt tensor rank");
        std::vector<std::size_t> shape(rank);
        std::size_t total = 1;
        for (auto& d : shape) {
            std::uint32_t v;
            if (!get_u32(in, v)) throw std::runtime_error("truncated checkpoint");
            d = v;
            total *= v;
        }
        Tensor<float>* dst = find(name);
        if (!dst) throw std::runtime_error("unknown tensor in checkpoint: " + name);
        if (dst->shape() != shape)
            throw std::runtime_error("tensor shape mismatch in checkpoint: " + name);
        if (!get_f32_block(in, dst->data(), total))
            throw std::runtime_error("truncated checkpoint payload");
        if (name.rfind("adam.", 0) == 0) ++adam_tensors;
    }
    ck.has_adam = adam_tensors > 0;
    return ck;
}

}  // namespace mstm::nn
