#include "core/system_io.hpp"

#include "core/error.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace osp {

using nlohmann::json;

namespace {

const json &field(const json &j, const char *name) {
  if (!j.is_object() || !j.contains(name))
    fail(ErrorCode::Parse, std::string("missing field \"") + name + "\"");
  return j.at(name);
}

template <class T> T get_as(const json &j, const char *what) {
  try {
    return j.get<T>();
  } catch (const json::exception &e) {
    fail(ErrorCode::Parse, std::string("bad value for ") + what + ": " + e.what());
  }
}

void check_version(const json &j) {
  if (j.contains("format_version") && j.at("format_version") != kFormatVersion)
    fail(ErrorCode::Parse, "unsupported format_version");
}

const char *kind_name(FactorKind k) {
  switch (k) {
  case FactorKind::Base:
    return "base";
  case FactorKind::Ortho:
    return "ortho";
  case FactorKind::Dual:
    return "dual";
  }
  return "?";
}

FactorKind kind_from(const std::string &s) {
  if (s == "base")
    return FactorKind::Base;
  if (s == "ortho")
    return FactorKind::Ortho;
  if (s == "dual")
    return FactorKind::Dual;
  fail(ErrorCode::Parse, "unknown factor kind " + s);
}

// System description without coefficient payloads; `coeffs` are written separately.
json system_header(const OrthoSystem &sys, bool inline_coeffs) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "ortho_system";
  j["filtration"] = filtration_to_json(sys.filtration());
  j["orders"] = sys.orders();
  json pools = json::array();
  for (std::size_t d = 0; d < sys.dim(); ++d) {
    json arr = json::array();
    for (const auto &f : sys.pool(d)) {
      json e{{"kind", kind_name(f.kind)}, {"stage", f.stage}, {"j", f.j_atom}, {"size", f.coeffs.size()}};
      if (inline_coeffs)
        e["coeffs"] = std::vector<double>(f.coeffs.data(), f.coeffs.data() + f.coeffs.size());
      arr.push_back(std::move(e));
    }
    pools.push_back(std::move(arr));
  }
  j["pool"] = std::move(pools);
  json fns = json::array();
  for (const auto &f : sys.functions())
    fns.push_back({{"n", f.n}, {"m", f.m}, {"a_step", f.n}, {"factors", f.factors}, {"j", f.j.index}});
  j["functions"] = std::move(fns);
  return j;
}

OrthoSystem system_from_header(const json &j, const std::vector<std::vector<Eigen::VectorXd>> *payload) {
  check_version(j);
  OrthoSystem sys(filtration_from_json(field(j, "filtration")),
                  get_as<std::vector<int>>(field(j, "orders"), "orders"));
  const json &pools = field(j, "pool");
  if (!pools.is_array() || pools.size() != sys.dim())
    fail(ErrorCode::Parse, "pool must list one array per direction");
  for (std::size_t d = 0; d < sys.dim(); ++d) {
    std::size_t idx = 0;
    for (const auto &e : pools[d]) {
      FactorFunction f;
      f.kind = kind_from(get_as<std::string>(field(e, "kind"), "kind"));
      f.stage = get_as<std::size_t>(field(e, "stage"), "stage");
      f.j_atom = get_as<std::size_t>(field(e, "j"), "j");
      if (payload) {
        f.coeffs = (*payload).at(d).at(idx);
      } else {
        const auto c = get_as<std::vector<double>>(field(e, "coeffs"), "coeffs");
        f.coeffs = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
      }
      sys.add_factor(d, std::move(f));
      ++idx;
    }
  }
  std::size_t block = 0;
  for (const auto &e : field(j, "functions")) {
    TensorOrthoFunction f;
    f.n = get_as<std::size_t>(field(e, "n"), "n");
    f.m = get_as<std::size_t>(field(e, "m"), "m");
    f.factors = get_as<std::vector<std::size_t>>(field(e, "factors"), "factors");
    f.j = AtomRef{f.n, get_as<std::vector<std::ptrdiff_t>>(field(e, "j"), "j")};
    if (f.n < block)
      fail(ErrorCode::Parse, "functions must be ordered by block");
    while (block < f.n) {
      sys.close_block();
      ++block;
    }
    sys.add_function(std::move(f));
  }
  if (!sys.functions().empty())
    sys.close_block();
  return sys;
}

constexpr char kMagic[8] = {'O', 'S', 'P', 'S', 'Y', 'S', '0', '1'};

} // namespace

json filtration_to_json(const TensorFiltration &f) {
  json j;
  j["format_version"] = kFormatVersion;
  j["dim"] = f.dim();
  json iv = json::array(), bp = json::array();
  bool nontrivial = false;
  for (std::size_t d = 0; d < f.dim(); ++d) {
    const Partition1D &b = f.factor(d).base();
    iv.push_back({b.left(), b.right()});
    bp.push_back(b.breakpoints());
    nontrivial |= !b.breakpoints().empty();
  }
  j["intervals"] = std::move(iv);
  if (nontrivial)
    j["breakpoints"] = std::move(bp);
  json sched = json::array();
  for (const auto &e : f.schedule()) {
    const SplitStep &s = f.factor(e.dir).step(e.factor_step);
    sched.push_back({{"dir", e.dir}, {"atom", s.atom}, {"x", s.x}});
  }
  j["schedule"] = std::move(sched);
  return j;
}

TensorFiltration filtration_from_json(const json &j) {
  check_version(j);
  const auto dim = get_as<std::size_t>(field(j, "dim"), "dim");
  const json &iv = field(j, "intervals");
  if (!iv.is_array() || iv.size() != dim || dim == 0)
    fail(ErrorCode::Parse, "intervals must hold one [a, b] pair per direction");
  std::vector<Partition1D> bases;
  for (std::size_t d = 0; d < dim; ++d) {
    const auto ab = get_as<std::vector<double>>(iv[d], "interval");
    if (ab.size() != 2)
      fail(ErrorCode::Parse, "interval must be [a, b]");
    std::vector<double> bp;
    if (j.contains("breakpoints"))
      bp = get_as<std::vector<double>>(j.at("breakpoints").at(d), "breakpoints");
    bases.emplace_back(ab[0], ab[1], std::move(bp));
  }
  TensorFiltration f(std::move(bases));
  for (const auto &s : field(j, "schedule"))
    f.split(get_as<std::size_t>(field(s, "dir"), "dir"), get_as<std::size_t>(field(s, "atom"), "atom"),
            get_as<double>(field(s, "x"), "x"));
  return f;
}

json system_to_json(const OrthoSystem &sys) { return system_header(sys, true); }

OrthoSystem system_from_json(const json &j) { return system_from_header(j, nullptr); }

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out)
    fail(ErrorCode::Io, "write failed for " + path);
}

static bool ends_with_bin(const std::string &path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
}

void save_system(const OrthoSystem &sys, const std::string &path) {
  if (!ends_with_bin(path)) {
    write_text_file(path, system_to_json(sys).dump());
    return;
  }
  const std::string header = system_header(sys, false).dump();
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorCode::Io, "cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kFormatVersion;
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char *>(&version), sizeof version);
  out.write(reinterpret_cast<const char *>(&len), sizeof len);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (std::size_t d = 0; d < sys.dim(); ++d)
    for (const auto &f : sys.pool(d))
      out.write(reinterpret_cast<const char *>(f.coeffs.data()),
                static_cast<std::streamsize>(f.coeffs.size() * sizeof(double)));
  if (!out)
    fail(ErrorCode::Io, "write failed for " + path);
}

OrthoSystem load_system(const std::string &path) {
  const std::string raw = read_text_file(path);
  if (raw.size() < sizeof kMagic || std::memcmp(raw.data(), kMagic, sizeof kMagic) != 0) {
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::exception &e) {
      fail(ErrorCode::Parse, std::string("system file is neither binary nor JSON: ") + e.what());
    }
    return system_from_json(j);
  }
  std::size_t pos = sizeof kMagic;
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  if (raw.size() < pos + sizeof version + sizeof len)
    fail(ErrorCode::Parse, "truncated binary system");
  std::memcpy(&version, raw.data() + pos, sizeof version);
  pos += sizeof version;
  std::memcpy(&len, raw.data() + pos, sizeof len);
  pos += sizeof len;
  if (version != kFormatVersion)
    fail(ErrorCode::Parse, "unsupported binary format version");
  if (raw.size() < pos + len)
    fail(ErrorCode::Parse, "truncated binary system header");
  json header;
  try {
    header = json::parse(raw.substr(pos, len));
  } catch (const json::exception &e) {
    fail(ErrorCode::Parse, std::string("bad binary header: ") + e.what());
  }
  pos += len;
  std::vector<std::vector<Eigen::VectorXd>> payload;
  for (const auto &arr : field(header, "pool")) {
    payload.emplace_back();
    for (const auto &e : arr) {
      const auto n = get_as<std::size_t>(field(e, "size"), "size");
      if (raw.size() < pos + n * sizeof(double))
        fail(ErrorCode::Parse, "truncated binary payload");
      Eigen::VectorXd v(static_cast<Eigen::Index>(n));
      std::memcpy(v.data(), raw.data() + pos, n * sizeof(double));
      pos += n * sizeof(double);
      payload.back().push_back(std::move(v));
    }
  }
  return system_from_header(header, &payload);
}

} // namespace osp
