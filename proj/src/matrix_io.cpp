#include "stote_ot/matrix_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace stote_ot {

namespace {

using nlohmann::json;

void read_part(const json& j, const char* key, int d, bool imag, ComplexMatrix& out) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array() || static_cast<int>(it->size()) != d)
    throw std::invalid_argument(std::string("matrix file: bad or missing '") + key + "'");
  for (int r = 0; r < d; ++r) {
    const json& row = (*it)[r];
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      throw std::invalid_argument(std::string("matrix file: ragged '") + key + "' array");
    for (int c = 0; c < d; ++c) {
      if (!row[c].is_number())
        throw std::invalid_argument(std::string("matrix file: non-numeric entry in '") + key + "'");
      const double v = row[c].get<double>();
      if (!std::isfinite(v))
        throw std::invalid_argument(std::string("matrix file: non-finite entry in '") + key + "'");
      if (imag)
        out(r, c) += Complex(0.0, v);
      else
        out(r, c) += Complex(v, 0.0);
    }
  }
}

}  // namespace

MatrixFile parse_matrix_file(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("matrix file: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("matrix file: top level is not an object");
  if (!j.contains("dim") || !j["dim"].is_number_integer())
    throw std::invalid_argument("matrix file: bad or missing 'dim'");
  const int d = j["dim"].get<int>();
  if (d < 1) throw std::invalid_argument("matrix file: 'dim' must be positive");

  MatrixFile f{ComplexMatrix(d, d), std::nullopt};
  read_part(j, "re", d, false, f.matrix);
  read_part(j, "im", d, true, f.matrix);

  if (j.contains("dims")) {
    const json& t = j["dims"];
    if (!t.is_array() || t.size() != 2 || !t[0].is_number_integer() || !t[1].is_number_integer())
      throw std::invalid_argument("matrix file: 'dims' must be a pair of integers");
    BipartiteDims bd{t[0].get<int>(), t[1].get<int>()};
    if (bd.da < 1 || bd.db < 1 || bd.total() != d)
      throw std::invalid_argument("matrix file: 'dims' do not factor 'dim'");
    f.dims = bd;
  }
  return f;
}

std::string emit_matrix_file(const ComplexMatrix& m, std::optional<BipartiteDims> dims) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix file: matrix must be square");
  const int d = m.rows();
  json re = json::array();
  json im = json::array();
  for (int r = 0; r < d; ++r) {
    json rr = json::array();
    json ri = json::array();
    for (int c = 0; c < d; ++c) {
      const Complex v = m(r, c);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw std::invalid_argument("matrix file: refusing to emit non-finite entry");
      rr.push_back(v.real());
      ri.push_back(v.imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  json j;
  j["dim"] = d;
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  if (dims) j["dims"] = {dims->da, dims->db};
  return j.dump(2);
}

HermitianMatrix require_hermitian(const MatrixFile& f) {
  return HermitianMatrix(f.matrix, 1e-9);
}

MatrixFile load_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_matrix_file(ss.str());
}

}  // namespace stote_ot
