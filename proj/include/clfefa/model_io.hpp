// Model artifact I/O and the key=value text form of HyperParams.
//
// Layout (all integers unsigned 64-bit little-endian):
//   bytes 0..6   magic "CLFEFA1"
//   u64          D
//   u64          d
//   D*d f64 LE   P, row-major
//   u64          length of the parameter block in bytes
//   text         "key=value\n" lines, see hyperparams_to_text
#pragma once

#include "clfefa/core.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace clfefa {

inline constexpr char kModelMagic[] = "CLFEFA1";
inline constexpr std::size_t kModelMagicLen = 7;

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ConfigError, "key '" + key + "': '" + v + "' is not a number");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ConfigError, "key '" + key + "': '" + v + "' is not an integer");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorKind::ConfigError, "key '" + key + "': '" + v + "' is not a boolean");
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8))
    throw Error(ErrorKind::TruncatedPayload, "model file ended inside an integer field");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Applies one key=value pair to the parameters. Returns false for keys that
/// are not hyperparameters.
inline bool apply_hyperparam(HyperParams& p, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "sigma") p.sigma = parse_double(key, value);
  else if (key == "lambda") p.lambda = parse_double(key, value);
  else if (key == "k") p.k = static_cast<int>(parse_int(key, value));
  else if (key == "c") p.c = static_cast<int>(parse_int(key, value));
  else if (key == "d") p.d = static_cast<int>(parse_int(key, value));
  else if (key == "alpha") p.adam.alpha = parse_double(key, value);
  else if (key == "beta1") p.adam.beta1 = parse_double(key, value);
  else if (key == "beta2") p.adam.beta2 = parse_double(key, value);
  else if (key == "epsilon") p.adam.epsilon = parse_double(key, value);
  else if (key == "tol_inner") p.tol_inner = parse_double(key, value);
  else if (key == "tol_outer") p.tol_outer = parse_double(key, value);
  else if (key == "max_inner") p.max_inner = static_cast<int>(parse_int(key, value));
  else if (key == "max_outer") p.max_outer = static_cast<int>(parse_int(key, value));
  else if (key == "seed") p.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "init") {
    if (value == "pca") p.init = InitScheme::Pca;
    else if (value == "random") p.init = InitScheme::RandomOrthonormal;
    else throw Error(ErrorKind::ConfigError, "key 'init': expected pca or random, got '" + value + "'");
  } else if (key == "exclude_self") p.exclude_self = parse_bool(key, value);
  else if (key == "adaptive_lambda") p.adaptive_lambda = parse_bool(key, value);
  else if (key == "mask_incompatible") p.mask_incompatible = parse_bool(key, value);
  else return false;
  return true;
}

inline std::string hyperparams_to_text(const HyperParams& p) {
  using detail::format_double;
  std::ostringstream os;
  os << "sigma=" << format_double(p.sigma) << '\n'
     << "lambda=" << format_double(p.lambda) << '\n'
     << "k=" << p.k << '\n'
     << "c=" << p.c << '\n'
     << "d=" << p.d << '\n'
     << "alpha=" << format_double(p.adam.alpha) << '\n'
     << "beta1=" << format_double(p.adam.beta1) << '\n'
     << "beta2=" << format_double(p.adam.beta2) << '\n'
     << "epsilon=" << format_double(p.adam.epsilon) << '\n'
     << "tol_inner=" << format_double(p.tol_inner) << '\n'
     << "tol_outer=" << format_double(p.tol_outer) << '\n'
     << "max_inner=" << p.max_inner << '\n'
     << "max_outer=" << p.max_outer << '\n'
     << "seed=" << p.seed << '\n'
     << "init=" << (p.init == InitScheme::Pca ? "pca" : "random") << '\n'
     << "exclude_self=" << (p.exclude_self ? "true" : "false") << '\n'
     << "adaptive_lambda=" << (p.adaptive_lambda ? "true" : "false") << '\n'
     << "mask_incompatible=" << (p.mask_incompatible ? "true" : "false") << '\n';
  return os.str();
}

inline HyperParams hyperparams_from_text(const std::string& text) {
  HyperParams p;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ConfigError, "malformed parameter line '" + line + "'");
    const std::string key = line.substr(0, eq);
    if (!apply_hyperparam(p, key, line.substr(eq + 1)))
      throw Error(ErrorKind::ConfigError, "unknown parameter key '" + key + "'");
  }
  return p;
}

struct Model {
  Projection projection;
  HyperParams params;
};

inline void write_model(std::ostream& os, const Model& model) {
  const Matrix& P = model.projection.P;
  os.write(kModelMagic, kModelMagicLen);
  detail::put_u64(os, static_cast<std::uint64_t>(P.rows()));
  detail::put_u64(os, static_cast<std::uint64_t>(P.cols()));
  for (Index r = 0; r < P.rows(); ++r)
    for (Index c = 0; c < P.cols(); ++c)
      detail::put_u64(os, std::bit_cast<std::uint64_t>(P(r, c)));
  const std::string text = hyperparams_to_text(model.params);
  detail::put_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline Model read_model(std::istream& is) {
  char magic[kModelMagicLen];
  if (!is.read(magic, kModelMagicLen) || std::memcmp(magic, kModelMagic, kModelMagicLen) != 0)
    throw Error(ErrorKind::BadMagic, "not a CLFEFA1 model file");
  const std::uint64_t D = detail::get_u64(is);
  const std::uint64_t d = detail::get_u64(is);
  if (D == 0 || d == 0 || D > (1u << 24) || d > D)
    throw Error(ErrorKind::TruncatedPayload, "implausible model shape");
  Model m;
  m.projection.P.resize(static_cast<Index>(D), static_cast<Index>(d));
  for (Index r = 0; r < static_cast<Index>(D); ++r)
    for (Index c = 0; c < static_cast<Index>(d); ++c)
      m.projection.P(r, c) = std::bit_cast<double>(detail::get_u64(is));
  const std::uint64_t len = detail::get_u64(is);
  std::string text(len, '\0');
  if (len && !is.read(text.data(), static_cast<std::streamsize>(len)))
    throw Error(ErrorKind::TruncatedPayload, "model parameter block is truncated");
  m.params = hyperparams_from_text(text);
  return m;
}

inline void save_model(const std::string& path, const Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path);
  write_model(os, model);
}

inline Model load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path);
  return read_model(is);
}

}  // namespace clfefa
