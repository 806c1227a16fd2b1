#pragma once

#include <optional>
#include <string>

#include "stote_ot/linalg.hpp"

namespace stote_ot {

// On-disk matrix record: {"dim": d, "re": [[...]], "im": [[...]]} plus an
// optional "dims": [dA, dB] tag for bipartite objects.
struct MatrixFile {
  ComplexMatrix matrix;
  std::optional<BipartiteDims> dims;
};

// Throws std::invalid_argument on malformed JSON, missing fields, ragged
// arrays or non-finite entries.
MatrixFile parse_matrix_file(const std::string& text);

// Doubles are written in shortest round-trip form: parse(emit(x)) == x.
std::string emit_matrix_file(const ComplexMatrix& m,
                             std::optional<BipartiteDims> dims = std::nullopt);

// For inputs that feed Hermitian interfaces; rejects defects beyond 1e-9.
HermitianMatrix require_hermitian(const MatrixFile& f);

MatrixFile load_matrix_file(const std::string& path);

}  // namespace stote_ot
