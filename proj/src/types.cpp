#include "braintf/types.hpp"

namespace braintf {

std::string to_string(Band b) {
  switch (b) {
    case Band::low:
      return "low";
    case Band::mid:
      return "mid";
    case Band::high:
      return "high";
  }
  throw std::logic_error("unreachable band tag");
}

Band band_from_string(std::string_view s) {
  if (s == "low") return Band::low;
  if (s == "mid") return Band::mid;
  if (s == "high") return Band::high;
  throw data_error("unknown band name: " + std::string(s) +
                   " (expected low, mid or high)");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  // FNV-1a over the tag, then a splitmix64 finalizer mixing in the root.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return splitmix64(root ^ splitmix64(h));
}

}  // namespace braintf
