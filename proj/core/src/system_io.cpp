#include "sscf/system_io.hpp"

#include <fstream>

#include <json.hpp>

#include "sscf/error.hpp"
#include "sscf/matrix_market.hpp"

namespace sscf::dftb {

namespace fs = std::filesystem;
using nlohmann::json;

void write_system(const TightBindingSystem& sys, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_matrix_market(sys.h0, dir / "H0.mtx");
  write_matrix_market(sys.s, dir / "S.mtx");
  write_matrix_market(sys.gamma, dir / "gamma.mtx");

  json j;
  j["orbital_counts"] = sys.partition.orbital_counts();
  j["q0"] = std::vector<double>(sys.q0.data(), sys.q0.data() + sys.q0.size());
  j["mu"] = sys.mu;
  j["beta"] = sys.beta;
  j["name"] = sys.name;
  if (!sys.generator_spec_json.empty()) j["generator_spec"] = json::parse(sys.generator_spec_json);
  std::ofstream out(dir / "system.json");
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + (dir / "system.json").string());
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorKind::Io, "write failed: " + (dir / "system.json").string());
}

TightBindingSystem read_system(const fs::path& dir) {
  const fs::path meta = dir / "system.json";
  std::ifstream in(meta);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + meta.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, meta.string() + ": " + e.what());
  }

  TightBindingSystem sys;
  try {
    sys.partition = OrbitalPartition(j.at("orbital_counts").get<std::vector<Index>>());
    const auto q0 = j.at("q0").get<std::vector<double>>();
    sys.q0 = Eigen::Map<const Vector>(q0.data(), static_cast<Index>(q0.size()));
    sys.mu = j.at("mu").get<double>();
    sys.beta = j.at("beta").get<double>();
    sys.name = j.value("name", std::string{});
    if (j.contains("generator_spec")) sys.generator_spec_json = j["generator_spec"].dump();
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidSystem, meta.string() + ": " + e.what());
  }
  sys.h0 = read_matrix_market(dir / "H0.mtx");
  sys.s = read_matrix_market(dir / "S.mtx");
  sys.gamma = read_matrix_market(dir / "gamma.mtx");
  sys.validate();
  return sys;
}

}  // namespace sscf::dftb
