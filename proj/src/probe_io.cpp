#include "qbnorm/probe_io.hpp"

#include "byteio.hpp"

#include <limits>
#include <string_view>

namespace qbnorm {

namespace {

constexpr std::string_view kProbeMagic = "QBNP";
constexpr std::uint8_t kHasProbe = 1;
constexpr std::uint8_t kHasCsls = 2;
constexpr std::uint8_t kLogSpace = 4;

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv(std::uint64_t& h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
}

std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw ValidationError(std::string(what) + " too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::uint64_t gallery_fingerprint(const EmbeddingMatrix& gallery) {
  std::uint64_t h = kFnvOffset;
  for (const auto& id : gallery.ids()) {
    fnv(h, id);
    fnv(h, std::string_view("\0", 1));
  }
  const auto* bytes = reinterpret_cast<const char*>(gallery.data().data());
  fnv(h, std::string_view(bytes, static_cast<std::size_t>(gallery.data().size()) * sizeof(float)));
  return h;
}

std::string encode_probe(const ProbeArtifact& artifact) {
  const ProbeIndex& p = artifact.index;
  detail::ByteWriter w;
  w.raw(kProbeMagic);
  w.u32(kProbeFormatVersion);
  w.u8(static_cast<std::uint8_t>(artifact.method));
  w.f64(p.beta);
  w.u32(narrow(p.k_activation, "k_activation"));
  w.u32(narrow(p.k_csls, "K_csls"));
  w.u32(narrow(p.gallery_size, "gallery size"));
  w.u32(narrow(p.querybank_size, "querybank size"));
  w.u64(artifact.gallery_fingerprint);
  std::uint8_t flags = 0;
  if (p.has_probe()) flags |= kHasProbe;
  if (p.csls_topk_mean.size() > 0) flags |= kHasCsls;
  if (p.log_space) flags |= kLogSpace;
  w.u8(flags);
  for (Eigen::Index j = 0; j < p.is_denominators.size(); ++j) w.f64(p.is_denominators[j]);
  for (Eigen::Index j = 0; j < p.is_log_denominators.size(); ++j) w.f64(p.is_log_denominators[j]);
  for (Eigen::Index j = 0; j < p.csls_topk_mean.size(); ++j) w.f64(p.csls_topk_mean[j]);
  w.u32(narrow(p.activation_set.size(), "activation set"));
  for (Index j : p.activation_set) w.u32(narrow(j, "activation index"));
  for (Eigen::Index i = 0; i < p.probe.size(); ++i) w.f64(p.probe.data()[i]);
  return std::move(w).take();
}

ProbeArtifact decode_probe(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(kProbeMagic.size()) != kProbeMagic) throw FormatError("bad magic, expected QBNP probe artifact");
  const std::uint32_t version = r.u32();
  if (version != kProbeFormatVersion) {
    throw FormatError("probe artifact version " + std::to_string(version) + ", this build reads " +
                      std::to_string(kProbeFormatVersion));
  }
  ProbeArtifact a;
  const std::uint8_t method = r.u8();
  if (method > static_cast<std::uint8_t>(Method::dis)) throw FormatError("unknown method tag in artifact");
  a.method = static_cast<Method>(method);
  ProbeIndex& p = a.index;
  p.beta = r.f64();
  p.k_activation = r.u32();
  p.k_csls = r.u32();
  p.gallery_size = r.u32();
  p.querybank_size = r.u32();
  a.gallery_fingerprint = r.u64();
  const std::uint8_t flags = r.u8();
  if (p.gallery_size == 0 || p.querybank_size == 0) throw FormatError("artifact declares empty shapes");
  p.log_space = (flags & kLogSpace) != 0;

  const auto g = static_cast<Eigen::Index>(p.gallery_size);
  auto read_vec = [&](Eigen::VectorXd& v) {
    v.resize(g);
    for (Eigen::Index j = 0; j < g; ++j) v[j] = r.f64();
  };
  read_vec(p.is_denominators);
  read_vec(p.is_log_denominators);
  if (flags & kHasCsls) read_vec(p.csls_topk_mean);
  const std::uint32_t active = r.u32();
  if (active > p.gallery_size) throw FormatError("activation set larger than gallery");
  p.activation_set.resize(active);
  for (auto& j : p.activation_set) j = r.u32();
  if (flags & kHasProbe) {
    p.probe.resize(g, static_cast<Eigen::Index>(p.querybank_size));
    for (Eigen::Index i = 0; i < p.probe.size(); ++i) p.probe.data()[i] = r.f64();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after probe artifact");
  finalise_probe(p);
  return a;
}

void save_probe(const ProbeArtifact& artifact, const std::filesystem::path& path) {
  write_file_atomic(path, encode_probe(artifact));
}

ProbeArtifact load_probe(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_probe(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace qbnorm
