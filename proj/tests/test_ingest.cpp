#include "clfefa/eval.hpp"
#include "clfefa/ingest.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace clfefa;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "clfefa_test_ingest";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  os << s;
}

IdxFile two_image_fixture() {
  IdxFile f;
  f.header.magic = kIdxImagesMagic;
  f.header.dims = {2, 2, 3};
  f.payload = {0, 255, 17, 34, 51, 68, 255, 0, 1, 2, 3, 128};
  return f;
}

IdxFile two_label_fixture() {
  IdxFile f;
  f.header.magic = kIdxLabelsMagic;
  f.header.dims = {2};
  f.payload = {7, 0};
  return f;
}

}  // namespace

TEST(Idx, ParseSerializeIsBitExact) {
  const auto bytes = serialize_idx(two_image_fixture());
  EXPECT_EQ(bytes.size(), 16u + 12u);
  EXPECT_EQ(bytes[3], 0x03);
  EXPECT_EQ(serialize_idx(parse_idx(bytes)), bytes);
}

TEST(Idx, LoadFixtureRoundTripsPixels) {
  const auto img = scratch("img.idx"), lab = scratch("lab.idx");
  write_idx(img.string(), two_image_fixture());
  write_idx(lab.string(), two_label_fixture());
  const Dataset ds = load_idx(img.string(), lab.string());
  EXPECT_EQ(ds.size(), 2);
  EXPECT_EQ(ds.dim(), 6);
  EXPECT_EQ(ds.labels, (Labels{8, 1}));
  const auto& payload = two_image_fixture().payload;
  for (Index i = 0; i < 2; ++i)
    for (Index f = 0; f < 6; ++f)
      EXPECT_EQ(std::lround(ds.X(f, i) * 255.0), payload[static_cast<std::size_t>(i * 6 + f)]);
}

TEST(Idx, CorruptedMagic) {
  auto bytes = serialize_idx(two_image_fixture());
  bytes[2] = 0x09;
  try {
    parse_idx(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BadMagic);
  }
}

TEST(Idx, TruncatedPayload) {
  auto bytes = serialize_idx(two_image_fixture());
  bytes.pop_back();
  try {
    parse_idx(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TruncatedPayload);
  }
}

TEST(Idx, CountMismatch) {
  IdxFile lab = two_label_fixture();
  lab.header.dims = {3};
  lab.payload.push_back(4);
  const auto img = scratch("img2.idx"), labp = scratch("lab2.idx");
  write_idx(img.string(), two_image_fixture());
  write_idx(labp.string(), lab);
  try {
    load_idx(img.string(), labp.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CountMismatch);
  }
}

#ifdef CLFEFA_MNIST_DIR
TEST(Idx, MnistSampleShape) {
  const std::string dir = CLFEFA_MNIST_DIR;
  if (!fs::exists(dir + "/images-idx3-ubyte")) GTEST_SKIP() << "run scripts/make_mnist_idx.py first";
  const Dataset raw = load_idx(dir + "/images-idx3-ubyte", dir + "/labels-idx1-ubyte");
  EXPECT_EQ(raw.dim(), 784);
  EXPECT_EQ(raw.classes, 10);
  const Dataset sub = subsample_and_rescale(raw, 2000, 16, 1);
  EXPECT_EQ(sub.size(), 2000);
  EXPECT_EQ(sub.dim(), 256);
  std::vector<int> counts(11, 0);
  for (int l : sub.labels) ++counts[static_cast<std::size_t>(l)];
  for (int c = 1; c <= 10; ++c) EXPECT_EQ(counts[static_cast<std::size_t>(c)], 200);
}
#endif

TEST(Resize, ConstantImageStaysConstant) {
  const Vector img = Vector::Constant(28 * 28, 0.37);
  const Vector out = bilinear_resize(img, 28, 28, 16, 16);
  EXPECT_EQ(out.size(), 256);
  EXPECT_LE((out.array() - 0.37).abs().maxCoeff(), 1e-15);
}

TEST(Resize, SameSizeIsIdentity) {
  Rng rng(1);
  const Vector img = rng.normal_matrix(25, 1).col(0);
  EXPECT_LE((bilinear_resize(img, 5, 5, 5, 5) - img).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Resize, HalvingAveragesPairs) {
  Vector img(4);
  img << 0, 2,
         4, 6;
  // 2x2 -> 1x1 samples the centre
  EXPECT_DOUBLE_EQ(bilinear_resize(img, 2, 2, 1, 1)(0), 3.0);
}

TEST(Subsample, FullKeepSameSideIsIdentity) {
  Rng rng(2);
  Dataset ds;
  ds.X = rng.normal_matrix(9, 12);
  for (int i = 0; i < 12; ++i) ds.labels.push_back(1 + i % 3);
  ds.classes = 3;
  const Dataset out = subsample_and_rescale(ds, 12, 3, 5);
  EXPECT_EQ(out.X, ds.X);
  EXPECT_EQ(out.labels, ds.labels);
}

TEST(Subsample, StratifiedCounts) {
  Rng rng(3);
  Dataset ds;
  ds.X = rng.normal_matrix(4, 100);
  for (int i = 0; i < 100; ++i) ds.labels.push_back(1 + (i * 7) % 4);
  ds.classes = 4;
  for (Index keep : {40, 42}) {
    const Dataset out = subsample_and_rescale(ds, keep, 1, 6);
    std::vector<int> counts(5, 0);
    for (int l : out.labels) ++counts[static_cast<std::size_t>(l)];
    const auto [lo, hi] = std::minmax_element(counts.begin() + 1, counts.end());
    EXPECT_LE(*hi - *lo, 1);
    EXPECT_EQ(out.size(), keep);
    EXPECT_EQ(out.dim(), 1);
  }
}

TEST(Subsample, TooLarge) {
  Dataset ds;
  ds.X = Matrix::Zero(4, 3);
  try {
    subsample_and_rescale(ds, 4, 2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SubsampleTooLarge);
  }
}

TEST(Csv, ThreeByTwo) {
  const auto p = scratch("small.csv");
  write_file(p, "a,b\n1,2\n3,4\n5,6\n");
  const Dataset ds = load_csv(p.string());
  EXPECT_EQ(ds.size(), 3);
  EXPECT_EQ(ds.dim(), 2);
  EXPECT_EQ(ds.X(1, 2), 6.0);
  EXPECT_FALSE(ds.has_labels());
}

TEST(Csv, LabelColumnAndUnlabelledCells) {
  const auto p = scratch("labelled.csv");
  write_file(p, "x,cls,y\n1,2,3\n4,,6\n");
  const Dataset ds = load_csv(p.string(), "cls");
  EXPECT_EQ(ds.dim(), 2);
  EXPECT_EQ(ds.labels, (Labels{2, kUnlabeled}));
  EXPECT_EQ(ds.X(1, 1), 6.0);
}

TEST(Csv, Errors) {
  const auto ragged = scratch("ragged.csv"), text = scratch("text.csv");
  write_file(ragged, "a,b\n1,2\n3\n");
  write_file(text, "a,b\n1,x\n");
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::ConfigError;
  };
  EXPECT_EQ(kind_of([&] { load_csv(ragged.string()); }), ErrorKind::RaggedRows);
  EXPECT_EQ(kind_of([&] { load_csv(text.string()); }), ErrorKind::NonNumericCell);
  EXPECT_EQ(kind_of([&] { load_csv(text.string(), "label"); }), ErrorKind::MissingColumn);
  EXPECT_EQ(kind_of([&] { load_csv(scratch("absent.csv").string()); }), ErrorKind::IoError);
}

TEST(Csv, RoundTrip) {
  Rng rng(4);
  Dataset ds;
  ds.X = rng.normal_matrix(3, 7) * 1e3;
  ds.labels = {1, 2, 0, 2, 1, 1, 2};
  ds.classes = 2;
  const auto p = scratch("roundtrip.csv");
  save_csv(p.string(), ds);
  const Dataset back = load_csv(p.string(), "label");
  EXPECT_EQ(back.X, ds.X);
  EXPECT_EQ(back.labels, ds.labels);
}

TEST(Blobs, NoiselessSamplesSitOnCentres) {
  const Dataset ds = make_blobs(4, 3, 5, 2.5, 0.0, 1);
  for (Index i = 0; i < ds.size(); ++i) {
    const int c = ds.labels[static_cast<std::size_t>(i)] - 1;
    for (Index f = 0; f < 5; ++f) EXPECT_EQ(ds.X(f, i), f == c ? 2.5 : 0.0);
  }
}

TEST(Blobs, WellSeparatedRawNearestNeighbour) {
  const Dataset ds = make_blobs(30, 3, 5, 10.0, 0.1, 2);
  Rng rng(3);
  const Split s = stratified_split(ds, 5, rng);
  const Dataset tr = select_columns(ds, s.train), te = select_columns(ds, s.test);
  EXPECT_GE(accuracy(knn_predict(tr.X, tr.labels, te.X), te.labels), 0.99);
}

TEST(Blobs, Deterministic) {
  EXPECT_EQ(make_blobs(5, 2, 3, 1.0, 1.0, 9).X, make_blobs(5, 2, 3, 1.0, 1.0, 9).X);
  EXPECT_NE(make_blobs(5, 2, 3, 1.0, 1.0, 9).X, make_blobs(5, 2, 3, 1.0, 1.0, 10).X);
}
