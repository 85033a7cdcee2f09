// Dataset sources: MNIST-style IDX files, numeric CSV, image rescaling with
// stratified subsampling, and synthetic Gaussian blobs.
#pragma once

#include "clfefa/core.hpp"

#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

namespace clfefa {

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxHeader {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;

  std::size_t payload_size() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

struct IdxFile {
  IdxHeader header;
  std::vector<std::uint8_t> payload;
};

namespace detail {

inline std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Parses an unsigned-byte IDX buffer (magic 0x801 or 0x803).
inline IdxFile parse_idx(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 4, ErrorKind::TruncatedPayload, "IDX buffer shorter than its magic");
  IdxFile f;
  f.header.magic = detail::read_be32(bytes.data());
  const std::size_t ndims = f.header.magic & 0xFF;
  require(f.header.magic == kIdxImagesMagic || f.header.magic == kIdxLabelsMagic,
          ErrorKind::BadMagic, "unexpected IDX magic");
  require(bytes.size() >= 4 + 4 * ndims, ErrorKind::TruncatedPayload, "IDX header truncated");
  for (std::size_t i = 0; i < ndims; ++i)
    f.header.dims.push_back(detail::read_be32(bytes.data() + 4 + 4 * i));
  const std::size_t offset = 4 + 4 * ndims;
  const std::size_t expect = f.header.payload_size();
  require(bytes.size() - offset == expect, ErrorKind::TruncatedPayload,
          "IDX payload has " + std::to_string(bytes.size() - offset) + " bytes, header implies " +
              std::to_string(expect));
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return f;
}

inline std::vector<std::uint8_t> serialize_idx(const IdxFile& f) {
  std::vector<std::uint8_t> out;
  detail::write_be32(out, f.header.magic);
  for (auto d : f.header.dims) detail::write_be32(out, d);
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

inline void write_idx(const std::string& path, const IdxFile& f) {
  const auto bytes = serialize_idx(f);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Images become columns scaled to [0,1]; digit labels d become classes d+1.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const IdxFile img = parse_idx(detail::read_bytes(images_path));
  const IdxFile lab = parse_idx(detail::read_bytes(labels_path));
  require(img.header.magic == kIdxImagesMagic && img.header.dims.size() == 3, ErrorKind::BadMagic,
          images_path + " is not an IDX image file");
  require(lab.header.magic == kIdxLabelsMagic && lab.header.dims.size() == 1, ErrorKind::BadMagic,
          labels_path + " is not an IDX label file");
  const std::size_t n = img.header.dims[0];
  require(lab.header.dims[0] == n, ErrorKind::CountMismatch,
          std::to_string(n) + " images but " + std::to_string(lab.header.dims[0]) + " labels");
  const std::size_t D = std::size_t{img.header.dims[1]} * img.header.dims[2];

  Dataset ds;
  ds.name = "idx";
  ds.X.resize(static_cast<Index>(D), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < D; ++f)
      ds.X(static_cast<Index>(f), static_cast<Index>(i)) = img.payload[i * D + f] / 255.0;
  int max_label = 0;
  ds.labels.reserve(n);
  for (std::uint8_t v : lab.payload) {
    ds.labels.push_back(static_cast<int>(v) + 1);
    max_label = std::max(max_label, static_cast<int>(v) + 1);
  }
  ds.classes = std::max(max_label, 1);
  return ds;
}

// ---------------------------------------------------------------------------
// Rescaling and subsampling
// ---------------------------------------------------------------------------

/// Bilinear resize of a row-major src_h x src_w image (pixel-centre aligned).
inline Vector bilinear_resize(const Eigen::Ref<const Vector>& img, int src_h, int src_w, int dst_h,
                              int dst_w) {
  require(img.size() == static_cast<Index>(src_h) * src_w, ErrorKind::DimensionMismatch,
          "image size does not match its shape");
  require(dst_h >= 1 && dst_w >= 1, ErrorKind::InvalidArgument, "target size must be positive");
  Vector out(static_cast<Index>(dst_h) * dst_w);
  const double sy = static_cast<double>(src_h) / dst_h;
  const double sx = static_cast<double>(src_w) / dst_w;
  auto px = [&](int y, int x) { return img(static_cast<Index>(y) * src_w + x); };
  for (int y = 0; y < dst_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src_h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src_w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * px(y0, x0) + wx * px(y0, x1);
      const double bot = (1.0 - wx) * px(y1, x0) + wx * px(y1, x1);
      out(static_cast<Index>(y) * dst_w + x) = (1.0 - wy) * top + wy * bot;
    }
  }
  return out;
}

/// Stratified random subsample of n_keep samples (class quotas differ by at
/// most one, extra slots to the lowest class ids), each square image resized
/// to side x side. Output keeps the original sample order.
inline Dataset subsample_and_rescale(const Dataset& ds, Index n_keep, int side, std::uint64_t seed) {
  require(n_keep >= 1 && n_keep <= ds.size(), ErrorKind::SubsampleTooLarge,
          "cannot keep " + std::to_string(n_keep) + " of " + std::to_string(ds.size()) + " samples");
  const int src = static_cast<int>(std::lround(std::sqrt(static_cast<double>(ds.dim()))));
  require(static_cast<Index>(src) * src == ds.dim(), ErrorKind::DimensionMismatch,
          "samples are not square images");
  require(side >= 1, ErrorKind::InvalidArgument, "side must be positive");

  Rng rng(seed);
  std::vector<Index> keep;
  if (ds.has_labels() && ds.labeled_count() == ds.size()) {
    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(ds.classes) + 1);
    for (Index i = 0; i < ds.size(); ++i)
      by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    std::vector<int> present;
    for (int c = 1; c <= ds.classes; ++c)
      if (!by_class[static_cast<std::size_t>(c)].empty()) present.push_back(c);
    const Index per = n_keep / static_cast<Index>(present.size());
    Index extra = n_keep % static_cast<Index>(present.size());
    for (int c : present) {
      auto members = by_class[static_cast<std::size_t>(c)];
      const Index quota = per + (extra > 0 ? 1 : 0);
      if (extra > 0) --extra;
      require(quota <= static_cast<Index>(members.size()), ErrorKind::SubsampleTooLarge,
              "class " + std::to_string(c) + " has only " + std::to_string(members.size()) +
                  " samples, quota " + std::to_string(quota));
      rng.shuffle(members);
      keep.insert(keep.end(), members.begin(), members.begin() + quota);
    }
  } else {
    std::vector<Index> all(static_cast<std::size_t>(ds.size()));
    std::iota(all.begin(), all.end(), Index{0});
    rng.shuffle(all);
    keep.assign(all.begin(), all.begin() + n_keep);
  }
  std::sort(keep.begin(), keep.end());

  Dataset picked = select_columns(ds, keep);
  if (side == src) return picked;
  Dataset out = picked;
  out.X.resize(static_cast<Index>(side) * side, picked.size());
  for (Index i = 0; i < picked.size(); ++i)
    out.X.col(i) = bilinear_resize(picked.X.col(i), src, src, side, side);
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

/// Header row required. Rows are samples; the optional label column holds
/// positive integer class ids (an empty cell marks an unlabeled sample).
inline Dataset load_csv(const std::string& path, const std::optional<std::string>& label_column = {}) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::RaggedRows, path + " has no header row");
  const auto header = detail::split_csv_line(line);

  std::optional<std::size_t> label_idx;
  if (label_column) {
    const auto it = std::find(header.begin(), header.end(), *label_column);
    if (it == header.end())
      throw Error(ErrorKind::MissingColumn, "no column named '" + *label_column + "' in " + path);
    label_idx = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::vector<double>> rows;
  Labels labels;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::RaggedRows, path + ":" + std::to_string(line_no) + " has " +
                                             std::to_string(cells.size()) + " cells, header has " +
                                             std::to_string(header.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (label_idx && c == *label_idx) {
        if (cells[c].empty()) {
          labels.push_back(kUnlabeled);
          continue;
        }
        char* end = nullptr;
        const long v = std::strtol(cells[c].c_str(), &end, 10);
        if (end == cells[c].c_str() || *end != '\0' || v < 1)
          throw Error(ErrorKind::NonNumericCell,
                      path + ":" + std::to_string(line_no) + " bad label '" + cells[c] + "'");
        labels.push_back(static_cast<int>(v));
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (cells[c].empty() || *end != '\0')
        throw Error(ErrorKind::NonNumericCell,
                    path + ":" + std::to_string(line_no) + " cell '" + cells[c] + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }

  Dataset ds;
  ds.name = path;
  const Index D = static_cast<Index>(header.size() - (label_idx ? 1 : 0));
  ds.X.resize(D, static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index f = 0; f < D; ++f) ds.X(f, static_cast<Index>(i)) = rows[i][static_cast<std::size_t>(f)];
  if (label_idx) {
    ds.labels = std::move(labels);
    int mx = 1;
    for (int c : ds.labels) mx = std::max(mx, c);
    ds.classes = mx;
  }
  return ds;
}

/// Writes samples as rows with header f0..f{D-1} and, if labeled, a trailing
/// "label" column.
inline void save_csv(const std::string& path, const Dataset& ds) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path);
  os.precision(17);
  for (Index f = 0; f < ds.dim(); ++f) os << (f ? "," : "") << 'f' << f;
  if (ds.has_labels()) os << (ds.dim() ? "," : "") << "label";
  os << '\n';
  for (Index i = 0; i < ds.size(); ++i) {
    for (Index f = 0; f < ds.dim(); ++f) os << (f ? "," : "") << ds.X(f, i);
    if (ds.has_labels()) {
      os << (ds.dim() ? "," : "");
      if (ds.is_labeled(i)) os << ds.labels[static_cast<std::size_t>(i)];
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Isotropic Gaussian blobs. Class c (1-based) is centred on
/// separation * e_{c-1}, or on -separation * e_{c-1-D} once the axes run out.
inline Dataset make_blobs(int n_per_class, int classes, int D, double separation, double noise_std,
                          std::uint64_t seed) {
  require(n_per_class >= 1 && classes >= 1 && D >= 1, ErrorKind::InvalidArgument,
          "blob counts and dimension must be positive");
  require(classes <= 2 * D, ErrorKind::InvalidArgument, "at most 2*D distinct axis-aligned centres");
  require(noise_std >= 0.0, ErrorKind::InvalidArgument, "noise_std must be nonnegative");
  Rng rng(seed);
  Dataset ds;
  ds.name = "blobs";
  ds.classes = classes;
  ds.X.resize(D, static_cast<Index>(n_per_class) * classes);
  Index col = 0;
  for (int c = 0; c < classes; ++c) {
    Vector centre = Vector::Zero(D);
    if (c < D) centre(c) = separation;
    else centre(c - D) = -separation;
    for (int s = 0; s < n_per_class; ++s, ++col) {
      for (int f = 0; f < D; ++f) ds.X(f, col) = centre(f) + noise_std * rng.normal();
      ds.labels.push_back(c + 1);
    }
  }
  return ds;
}

}  // namespace clfefa
