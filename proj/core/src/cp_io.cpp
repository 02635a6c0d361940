#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cptt/tensor_core.hpp"

namespace cptt {

namespace {

using ordered_json = nlohmann::ordered_json;
using Kind = ParseError::Kind;

constexpr int kFormatVersion = 1;

[[noreturn]] void schema_error(const std::string& msg) { throw ParseError(Kind::Schema, msg); }

double read_real(const ordered_json& v, const std::string& field) {
  if (!v.is_number()) schema_error(field + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError(Kind::NonFinite, field + ": non-finite value");
  return x;
}

const ordered_json& require(const ordered_json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) schema_error(std::string("missing field '") + key + "'");
  return *it;
}

// Builds the DOM while remembering where in the document we are, so that a
// literal too large for a double can be reported against its field.
class PathTrackingSax {
 public:
  using Dom = nlohmann::detail::json_sax_dom_parser<ordered_json>;
  using number_integer_t = ordered_json::number_integer_t;
  using number_unsigned_t = ordered_json::number_unsigned_t;
  using number_float_t = ordered_json::number_float_t;
  using string_t = ordered_json::string_t;
  using binary_t = ordered_json::binary_t;

  explicit PathTrackingSax(ordered_json& root) : dom_(root, false) {}

  bool null() { return leaf(dom_.null()); }
  bool boolean(bool v) { return leaf(dom_.boolean(v)); }
  bool number_integer(number_integer_t v) { return leaf(dom_.number_integer(v)); }
  bool number_unsigned(number_unsigned_t v) { return leaf(dom_.number_unsigned(v)); }
  bool number_float(number_float_t v, const string_t& s) { return leaf(dom_.number_float(v, s)); }
  bool string(string_t& v) { return leaf(dom_.string(v)); }
  bool binary(binary_t& v) { return leaf(dom_.binary(v)); }

  bool start_object(std::size_t n) {
    frames_.push_back({false, 0, {}});
    return dom_.start_object(n);
  }
  bool key(string_t& k) {
    frames_.back().key = k;
    return dom_.key(k);
  }
  bool end_object() {
    frames_.pop_back();
    return leaf(dom_.end_object());
  }
  bool start_array(std::size_t n) {
    frames_.push_back({true, 0, {}});
    return dom_.start_array(n);
  }
  bool end_array() {
    frames_.pop_back();
    return leaf(dom_.end_array());
  }

  template <typename Exception>
  bool parse_error(std::size_t pos, const std::string& token, const Exception& ex) {
    error_id_ = ex.id;
    message_ = ex.what();
    error_path_ = path();
    return dom_.parse_error(pos, token, ex);
  }

  [[noreturn]] void raise() const {
    // 406: a numeric literal that overflows double.
    if (error_id_ == 406) {
      throw ParseError(Kind::NonFinite,
                       (error_path_.empty() ? std::string("<root>") : error_path_) +
                           ": non-finite value");
    }
    throw ParseError(Kind::Syntax, "invalid JSON: " + message_);
  }

 private:
  struct Frame {
    bool array;
    std::size_t index;
    std::string key;
  };

  bool leaf(bool ok) {
    if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
    return ok;
  }

  std::string path() const {
    std::string p;
    for (const Frame& f : frames_) {
      if (f.array) {
        p += '[' + std::to_string(f.index) + ']';
      } else {
        if (!p.empty()) p += '.';
        p += f.key;
      }
    }
    return p;
  }

  Dom dom_;
  std::vector<Frame> frames_;
  int error_id_ = 0;
  std::string message_;
  std::string error_path_;
};

}  // namespace

CpTensor parse_cp(const std::string& text) {
  ordered_json doc;
  PathTrackingSax sax(doc);
  if (!ordered_json::sax_parse(text, &sax)) sax.raise();
  if (!doc.is_object()) schema_error("top-level value must be an object");

  const auto& version = require(doc, "format_version");
  if (!version.is_number_integer() || version.get<long long>() != kFormatVersion) {
    schema_error("format_version: expected " + std::to_string(kFormatVersion));
  }

  const auto& jdims = require(doc, "dims");
  if (!jdims.is_array() || jdims.empty()) schema_error("dims: expected a non-empty list");
  std::vector<Index> dims;
  for (std::size_t k = 0; k < jdims.size(); ++k) {
    const auto& v = jdims[k];
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      schema_error("dims[" + std::to_string(k) + "]: expected a positive integer");
    }
    dims.push_back(static_cast<Index>(v.get<long long>()));
  }

  const auto& jweights = require(doc, "weights");
  if (!jweights.is_array()) schema_error("weights: expected a list");
  const auto r = static_cast<Eigen::Index>(jweights.size());
  Vector weights(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    weights(i) = read_real(jweights[static_cast<std::size_t>(i)],
                           "weights[" + std::to_string(i) + "]");
  }

  const auto& jfactors = require(doc, "factors");
  if (!jfactors.is_array() || jfactors.size() != dims.size()) {
    schema_error("factors: expected " + std::to_string(dims.size()) + " matrices (one per dim)");
  }
  std::vector<Matrix> factors;
  factors.reserve(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const std::string name = "factors[" + std::to_string(k) + "]";
    const auto& jf = jfactors[k];
    if (!jf.is_array() || jf.size() != dims[k]) {
      schema_error(name + ": expected " + std::to_string(dims[k]) + " rows");
    }
    Matrix f(static_cast<Eigen::Index>(dims[k]), r);
    for (std::size_t n = 0; n < dims[k]; ++n) {
      const auto& row = jf[n];
      const std::string row_name = name + "[" + std::to_string(n) + "]";
      if (!row.is_array()) schema_error(row_name + ": expected a list");
      if (static_cast<Eigen::Index>(row.size()) != r) {
        schema_error(row_name + ": expected " + std::to_string(r) +
                     " columns (rank), found " + std::to_string(row.size()));
      }
      for (Eigen::Index i = 0; i < r; ++i) {
        f(static_cast<Eigen::Index>(n), i) =
            read_real(row[static_cast<std::size_t>(i)], row_name + "[" + std::to_string(i) + "]");
      }
    }
    factors.push_back(std::move(f));
  }
  return CpTensor(Grid(std::move(dims)), std::move(weights), std::move(factors));
}

std::string serialize_cp(const CpTensor& a) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["dims"] = a.grid().dims();
  auto& jw = doc["weights"] = ordered_json::array();
  for (Eigen::Index i = 0; i < a.weights().size(); ++i) jw.push_back(a.weights()(i));
  auto& jf = doc["factors"] = ordered_json::array();
  for (const Matrix& f : a.factors()) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index n = 0; n < f.rows(); ++n) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index i = 0; i < f.cols(); ++i) row.push_back(f(n, i));
      rows.push_back(std::move(row));
    }
    jf.push_back(std::move(rows));
  }
  return doc.dump() + "\n";
}

CpTensor read_cp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(Kind::Syntax, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_cp(buf.str());
}

void write_cp(const CpTensor& a, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << serialize_cp(a);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace cptt
