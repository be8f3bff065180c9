#pragma once

#include "qbnorm/embedstore.hpp"
#include "qbnorm/qbnorm.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace qbnorm {

inline constexpr std::uint32_t kProbeFormatVersion = 1;

/// Serialised probe index plus the method and gallery it was built for.
struct ProbeArtifact {
  Method method = Method::dis;
  std::uint64_t gallery_fingerprint = 0;
  ProbeIndex index;
};

/// FNV-1a over ids and raw float bytes; ties an artifact to one gallery file.
std::uint64_t gallery_fingerprint(const EmbeddingMatrix& gallery);

// Layout, little-endian:
//   "QBNP" u32 version u8 method f64 beta u32 k_activation u32 k_csls
//   u32 |G| u32 N u64 fingerprint u8 flags{1:probe, 2:csls, 4:log_space}
//   f64[|G|] D  f64[|G|] logD  [f64[|G|] csls]  u32 |A| u32[|A|] A  [f64[|G|*N] probe]
std::string encode_probe(const ProbeArtifact& artifact);
ProbeArtifact decode_probe(const std::string& bytes);

void save_probe(const ProbeArtifact& artifact, const std::filesystem::path& path);
ProbeArtifact load_probe(const std::filesystem::path& path);

}  // namespace qbnorm
