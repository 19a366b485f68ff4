#include "dexdedup/digest.hpp"

#include <array>
#include <fstream>

#include "dexdedup/error.hpp"

#define XXH_INLINE_ALL
#include "xxhash.h"

namespace dexdedup {

std::uint64_t digest64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  return XXH64(bytes.data(), bytes.size(), seed);
}

std::uint64_t digest64(std::string_view bytes, std::uint64_t seed) {
  return XXH64(bytes.data(), bytes.size(), seed);
}

std::uint64_t file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  XXH64_state_t* state = XXH64_createState();
  XXH64_reset(state, 0);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    XXH64_update(state, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  const std::uint64_t h = XXH64_digest(state);
  XXH64_freeState(state);
  return h;
}

}  // namespace dexdedup
