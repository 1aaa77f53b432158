#include <atomic>

#include "clasp/numerics/tape.hpp"

namespace clasp::numerics {

namespace {
std::atomic<std::size_t> g_zero_norm_rows{0};
}

const char* op_name(OpTag op) {
  switch (op) {
    case OpTag::constant: return "constant";
    case OpTag::parameter: return "parameter";
    case OpTag::add: return "add";
    case OpTag::sub: return "sub";
    case OpTag::mul_scalar: return "mul_scalar";
    case OpTag::scale: return "scale";
    case OpTag::exp: return "exp";
    case OpTag::matmul: return "matmul";
    case OpTag::conv1d: return "conv1d";
    case OpTag::relu: return "relu";
    case OpTag::embedding_lookup: return "embedding_lookup";
    case OpTag::mean_over_axis: return "mean_over_axis";
    case OpTag::l2_normalize_rows: return "l2_normalize_rows";
    case OpTag::transpose: return "transpose";
    case OpTag::log_softmax_rows: return "log_softmax_rows";
    case OpTag::gather_diag: return "gather_diag";
    case OpTag::reshape: return "reshape";
  }
  return "unknown";
}

std::size_t zero_norm_row_count() { return g_zero_norm_rows.load(); }

void note_zero_norm_row() { g_zero_norm_rows.fetch_add(1); }

}  // namespace clasp::numerics
