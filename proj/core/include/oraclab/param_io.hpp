#pragma once

// Versioned binary container for network parameters.
//
// Layout: 8-byte magic "ORACLAB\0", u32 format version, u64 header length,
// a JSON header describing every network (name, MlpSpec, array names and
// shapes) and the free scalar arrays, then the raw little-endian doubles of
// every array in header order (column-major). Writing a loaded archive
// reproduces the original bytes.

#include "oraclab/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace oraclab::nn {

inline constexpr std::uint32_t kArchiveFormatVersion = 1;

class FormatVersionError : public std::runtime_error {
 public:
  FormatVersionError(std::uint32_t found, std::uint32_t expected);
  std::uint32_t found() const { return found_; }

 private:
  std::uint32_t found_;
};

struct NetworkRecord {
  std::string name;
  MlpSpec spec;
  ParamSet params;
};

struct ParamArchive {
  /// Opaque, caller-defined text (the trainer stores its run config here).
  std::string metadata;
  std::vector<NetworkRecord> networks;
  /// Arrays without an MlpSpec, e.g. optimiser scalars.
  ParamSet scalars;

  const NetworkRecord& network(const std::string& name) const;
};

void write_archive(std::ostream& out, const ParamArchive& archive);
ParamArchive read_archive(std::istream& in);

void save_archive(const std::filesystem::path& path, const ParamArchive& archive);
ParamArchive load_archive(const std::filesystem::path& path);

}  // namespace oraclab::nn
