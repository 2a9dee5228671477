#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "cfrank/backbone.hpp"

namespace cfrank {

// Flat binary container (native little-endian):
//   bytes 0..7   magic "CFRKEMB1"
//   4 x int64    num_users, num_items, dim, num_layers
//   doubles      user matrix row-major, then item matrix row-major
// Round trips are bit-exact.
struct Checkpoint {
  EmbeddingState state;
  index_t num_layers = 0;
};

namespace detail {
inline constexpr std::array<char, 8> kCheckpointMagic = {'C', 'F', 'R', 'K', 'E', 'M', 'B', '1'};
}

inline void save_checkpoint(const std::filesystem::path& path, const EmbeddingState& state,
                            index_t num_layers) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp.string());
    out.write(detail::kCheckpointMagic.data(), detail::kCheckpointMagic.size());
    const std::int64_t header[4] = {state.num_users, state.num_items, state.dim, num_layers};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(state.user_emb.data()),
              static_cast<std::streamsize>(state.user_emb.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(state.item_emb.data()),
              static_cast<std::streamsize>(state.item_emb.size() * sizeof(double)));
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != detail::kCheckpointMagic)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  std::int64_t header[4] = {};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[0] < 0 || header[1] < 0 || header[2] <= 0 || header[3] < 0)
    throw std::runtime_error("corrupt checkpoint header: " + path.string());
  Checkpoint ck;
  ck.state.num_users = static_cast<index_t>(header[0]);
  ck.state.num_items = static_cast<index_t>(header[1]);
  ck.state.dim = static_cast<index_t>(header[2]);
  ck.num_layers = static_cast<index_t>(header[3]);
  ck.state.user_emb = RowMatrix(ck.state.num_users, ck.state.dim);
  ck.state.item_emb = RowMatrix(ck.state.num_items, ck.state.dim);
  in.read(reinterpret_cast<char*>(ck.state.user_emb.data()),
          static_cast<std::streamsize>(ck.state.user_emb.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(ck.state.item_emb.data()),
          static_cast<std::streamsize>(ck.state.item_emb.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
  return ck;
}

}  // namespace cfrank
