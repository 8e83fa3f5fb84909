#include "oraclab/param_io.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace oraclab::nn {

namespace {

using json = nlohmann::json;

constexpr std::array<char, 8> kMagic = {'O', 'R', 'A', 'C', 'L', 'A', 'B', '\0'};

static_assert(std::endian::native == std::endian::little, "archive IO assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("parameter archive truncated");
  return value;
}

json spec_to_json(const MlpSpec& spec) {
  return json{{"input_dim", spec.input_dim},   {"output_dim", spec.output_dim},
              {"hidden", spec.hidden},         {"layer_norm", spec.layer_norm},
              {"init_seed", spec.init_seed},   {"output_scale", spec.output_scale}};
}

MlpSpec spec_from_json(const json& j) {
  MlpSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.output_dim = j.at("output_dim").get<int>();
  spec.hidden = j.at("hidden").get<std::vector<int>>();
  spec.layer_norm = j.at("layer_norm").get<bool>();
  spec.init_seed = j.at("init_seed").get<std::uint64_t>();
  spec.output_scale = j.at("output_scale").get<double>();
  return spec;
}

json shapes_to_json(const ParamSet& params) {
  json arrays = json::array();
  for (const auto& a : params.arrays()) {
    arrays.push_back({{"name", a.name}, {"rows", a.value.rows()}, {"cols", a.value.cols()}});
  }
  return arrays;
}

ParamSet shapes_from_json(const json& arrays) {
  std::vector<NamedArray> out;
  for (const auto& a : arrays) {
    out.push_back({a.at("name").get<std::string>(),
                   Matrix(a.at("rows").get<Eigen::Index>(), a.at("cols").get<Eigen::Index>())});
  }
  return ParamSet(std::move(out));
}

void write_payload(std::ostream& out, const ParamSet& params) {
  for (const auto& a : params.arrays()) {
    out.write(reinterpret_cast<const char*>(a.value.data()),
              static_cast<std::streamsize>(a.value.size() * sizeof(double)));
  }
}

void read_payload(std::istream& in, ParamSet& params) {
  for (auto& a : params.arrays()) {
    in.read(reinterpret_cast<char*>(a.value.data()), static_cast<std::streamsize>(a.value.size() * sizeof(double)));
    if (!in) throw std::runtime_error("parameter archive truncated in array '" + a.name + "'");
  }
}

}  // namespace

FormatVersionError::FormatVersionError(std::uint32_t found, std::uint32_t expected)
    : std::runtime_error("unsupported parameter archive format version " + std::to_string(found) + " (expected " +
                         std::to_string(expected) + ")"),
      found_(found) {}

const NetworkRecord& ParamArchive::network(const std::string& name) const {
  for (const auto& n : networks) {
    if (n.name == name) return n;
  }
  throw std::out_of_range("parameter archive has no network '" + name + "'");
}

void write_archive(std::ostream& out, const ParamArchive& archive) {
  json header;
  header["metadata"] = archive.metadata;
  header["networks"] = json::array();
  for (const auto& n : archive.networks) {
    if (n.params.size() != n.spec.array_count()) {
      throw std::invalid_argument("network '" + n.name + "' does not match its spec");
    }
    header["networks"].push_back({{"name", n.name}, {"spec", spec_to_json(n.spec)}, {"arrays", shapes_to_json(n.params)}});
  }
  header["scalars"] = shapes_to_json(archive.scalars);
  const std::string text = header.dump();

  out.write(kMagic.data(), kMagic.size());
  write_pod(out, kArchiveFormatVersion);
  write_pod(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& n : archive.networks) write_payload(out, n.params);
  write_payload(out, archive.scalars);
  if (!out) throw std::runtime_error("failed writing parameter archive");
}

ParamArchive read_archive(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not a parameter archive (bad magic)");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kArchiveFormatVersion) throw FormatVersionError(version, kArchiveFormatVersion);
  const auto length = read_pod<std::uint64_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw std::runtime_error("parameter archive truncated in header");

  const json header = json::parse(text);
  ParamArchive archive;
  archive.metadata = header.at("metadata").get<std::string>();
  for (const auto& n : header.at("networks")) {
    NetworkRecord rec;
    rec.name = n.at("name").get<std::string>();
    rec.spec = spec_from_json(n.at("spec"));
    rec.params = shapes_from_json(n.at("arrays"));
    if (rec.params.size() != rec.spec.array_count()) {
      throw std::runtime_error("network '" + rec.name + "' arrays do not match its spec");
    }
    archive.networks.push_back(std::move(rec));
  }
  archive.scalars = shapes_from_json(header.at("scalars"));
  for (auto& n : archive.networks) read_payload(in, n.params);
  read_payload(in, archive.scalars);
  return archive;
}

void save_archive(const std::filesystem::path& path, const ParamArchive& archive) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_archive(out, archive);
}

ParamArchive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return read_archive(in);
}

}  // namespace oraclab::nn
