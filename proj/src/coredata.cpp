#include "smogan/coredata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "smogan/error.hpp"

namespace smogan {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyData: return "EmptyData";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::TooFewValues: return "TooFewValues";
    case Errc::DegenerateDistribution: return "DegenerateDistribution";
    case Errc::EmptyRareSet: return "EmptyRareSet";
    case Errc::NotEnoughNeighbours: return "NotEnoughNeighbours";
    case Errc::RareSetTooSmall: return "RareSetTooSmall";
    case Errc::BadWidths: return "BadWidths";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonScalarOutput: return "NonScalarOutput";
    case Errc::UnknownLossSpec: return "UnknownLossSpec";
    case Errc::BatchTooSmall: return "BatchTooSmall";
    case Errc::BadBandwidth: return "BadBandwidth";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::DivergedTraining: return "DivergedTraining";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::BadComponentCount: return "BadComponentCount";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::BadConfig: return "BadConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// RngStream

std::uint64_t mix64(std::uint64_t x) noexcept {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x534d4f47u};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

RngStream RngStream::child(std::uint64_t id) const {
  return RngStream(seed_, mix64(stream_id_ ^ mix64(id + 0x632be59bd9b4e019ULL)));
}

double RngStream::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

std::size_t RngStream::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

// ---------------------------------------------------------------------------
// Dataset

Matrix Dataset::joint() const {
  Matrix out(rows(), feature_count() + 1);
  out.leftCols(feature_count()) = features;
  out.col(feature_count()) = target;
  return out;
}

Dataset Dataset::from_joint(const Matrix& joint, std::vector<std::string> names) {
  Dataset d;
  const auto p = joint.cols() - 1;
  d.features = joint.leftCols(p);
  d.target = joint.col(p);
  d.column_names = std::move(names);
  return d;
}

Dataset Dataset::select(const std::vector<Eigen::Index>& idx) const {
  Dataset d;
  d.column_names = column_names;
  d.features.resize(static_cast<Eigen::Index>(idx.size()), feature_count());
  d.target.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    d.features.row(static_cast<Eigen::Index>(i)) = features.row(idx[i]);
    d.target[static_cast<Eigen::Index>(i)] = target[idx[i]];
  }
  return d;
}

void Dataset::validate() const {
  if (rows() < 1) throw Error(Errc::EmptyData, "dataset has no rows");
  if (feature_count() < 1) throw Error(Errc::DimensionMismatch, "dataset has no feature columns");
  if (target.size() != rows())
    throw Error(Errc::DimensionMismatch, "target length differs from feature row count");
  if (static_cast<Eigen::Index>(column_names.size()) != feature_count() + 1)
    throw Error(Errc::DimensionMismatch, "column name count must be p + 1");
  if (!features.allFinite() || !target.allFinite())
    throw Error(Errc::ParseError, "dataset contains non-finite values");
}

// ---------------------------------------------------------------------------
// CSV

namespace {

// Reads one RFC-4180 record. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (int ch = in.get(); ch != std::char_traits<char>::eof(); ch = in.get()) {
    any = true;
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // tolerate CRLF
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (any) fields.push_back(std::move(field));
  return any;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool blank(const std::vector<std::string>& rec) {
  return rec.size() == 1 && trim(rec[0]).empty();
}

}  // namespace

Dataset parse_csv(std::istream& in, const std::string& target_column) {
  std::vector<std::string> header;
  if (!read_record(in, header)) throw Error(Errc::EmptyData, "CSV input is empty");
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
  for (auto& h : header) h = std::string(trim(h));

  const auto it = std::find(header.begin(), header.end(), target_column);
  if (it == header.end())
    throw Error(Errc::MissingColumn, "target column '" + target_column + "' not in header");
  const auto target_col = static_cast<std::size_t>(it - header.begin());
  if (header.size() < 2) throw Error(Errc::DimensionMismatch, "CSV needs at least one feature column");

  std::vector<double> feats;
  std::vector<double> targets;
  std::vector<std::string> rec;
  std::size_t row = 0;
  while (read_record(in, rec)) {
    if (blank(rec)) continue;
    ++row;
    if (rec.size() != header.size()) {
      throw Error(Errc::ParseError, "row " + std::to_string(row) + " has " +
                                        std::to_string(rec.size()) + " fields, expected " +
                                        std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < rec.size(); ++c) {
      double v = 0.0;
      if (!parse_double(rec[c], v)) {
        throw Error(Errc::ParseError, "row " + std::to_string(row) + ", column '" + header[c] +
                                          "': cannot parse '" + rec[c] + "' as a finite number");
      }
      (c == target_col ? targets : feats).push_back(v);
    }
  }
  if (row == 0) throw Error(Errc::EmptyData, "CSV has a header but no data rows");

  Dataset d;
  const auto n = static_cast<Eigen::Index>(row);
  const auto p = static_cast<Eigen::Index>(header.size() - 1);
  d.features = Eigen::Map<Matrix>(feats.data(), n, p);
  d.target = Eigen::Map<Vector>(targets.data(), n);
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != target_col) d.column_names.push_back(header[c]);
  d.column_names.push_back(target_column);
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  return parse_csv(in, target_column);
}


// ---------------------------------------------------------------------------
// Scaler

Scaler fit_scaler(const Dataset& data) {
  if (data.rows() < 1) throw Error(Errc::EmptyData, "cannot fit a scaler on zero rows");
  const Matrix joint = data.joint();
  Scaler s;
  s.mean = joint.colwise().mean().transpose();
  const Matrix centered = joint.rowwise() - s.mean.transpose();
  s.std = (centered.array().square().colwise().sum() / static_cast<double>(joint.rows()))
              .sqrt()
              .transpose();
  for (Eigen::Index c = 0; c < s.std.size(); ++c)
    if (!(s.std[c] >= kMinScalerStd)) s.std[c] = 1.0;
  return s;
}

Matrix Scaler::apply_joint(const Matrix& joint) const {
  if (joint.cols() != mean.size())
    throw Error(Errc::DimensionMismatch, "scaler has " + std::to_string(mean.size()) +
                                             " columns, data has " + std::to_string(joint.cols()));
  return ((joint.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array()).matrix();
}

Matrix Scaler::invert_joint(const Matrix& joint) const {
  if (joint.cols() != mean.size())
    throw Error(Errc::DimensionMismatch, "scaler has " + std::to_string(mean.size()) +
                                             " columns, data has " + std::to_string(joint.cols()));
  return ((joint.array().rowwise() * std.transpose().array()).matrix().rowwise() +
          mean.transpose());
}

Dataset Scaler::apply(const Dataset& data) const {
  return Dataset::from_joint(apply_joint(data.joint()), data.column_names);
}

Dataset Scaler::invert(const Dataset& data) const {
  return Dataset::from_joint(invert_joint(data.joint()), data.column_names);
}

Dataset apply_scaler(const Dataset& data, const Scaler& scaler) { return scaler.apply(data); }

// ---------------------------------------------------------------------------
// Splitting

Split train_test_split(const Dataset& data, double test_fraction, RngStream rng) {
  const auto n = data.rows();
  if (n < 5) throw Error(Errc::TooFewRows, "train/test split needs at least 5 rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(Errc::BadConfig, "test fraction must lie in (0, 1)");

  auto n_test = static_cast<Eigen::Index>(std::llround(static_cast<double>(n) * test_fraction));
  n_test = std::clamp<Eigen::Index>(n_test, 1, n - 1);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  // Fisher-Yates with our own index draws so the permutation depends only on the stream.
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);

  Split s;
  s.test_rows.assign(order.begin(), order.begin() + n_test);
  s.train_rows.assign(order.begin() + n_test, order.end());
  std::sort(s.test_rows.begin(), s.test_rows.end());
  std::sort(s.train_rows.begin(), s.train_rows.end());
  s.train = data.select(s.train_rows);
  s.test = data.select(s.test_rows);
  return s;
}

}  // namespace smogan
