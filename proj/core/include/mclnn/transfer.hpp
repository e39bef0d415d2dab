#pragma once

#include <string>

#include "mclnn/matrix.hpp"

namespace mclnn {

enum class TransferKind { sigmoid, tanh, relu, identity };

double transfer_scalar(TransferKind kind, double x);

/// Derivative with respect to the pre-activation, evaluated at x.
/// relu uses the zero subgradient at the origin.
double transfer_derivative_scalar(TransferKind kind, double x);

/// Derivative expressed through the activation output y = f(x). All four
/// kinds admit this form, which lets backward passes reuse cached outputs.
double transfer_derivative_from_output(TransferKind kind, double y);

Matrix transfer(TransferKind kind, const Matrix& x);

const char* transfer_name(TransferKind kind);

/// Parses "sigmoid" | "tanh" | "relu" | "identity"; throws on anything else.
TransferKind parse_transfer(const std::string& name);

}  // namespace mclnn
