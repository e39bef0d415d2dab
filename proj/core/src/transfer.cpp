#include "mclnn/transfer.hpp"

#include <cmath>
#include <stdexcept>

namespace mclnn {

double transfer_scalar(TransferKind kind, double x) {
    switch (kind) {
        case TransferKind::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case TransferKind::tanh: return std::tanh(x);
        case TransferKind::relu: return x > 0.0 ? x : 0.0;
        case TransferKind::identity: return x;
    }
    throw std::invalid_argument("transfer_scalar: unknown kind");
}

double transfer_derivative_scalar(TransferKind kind, double x) {
    return transfer_derivative_from_output(kind, transfer_scalar(kind, x));
}

double transfer_derivative_from_output(TransferKind kind, double y) {
    switch (kind) {
        case TransferKind::sigmoid: return y * (1.0 - y);
        case TransferKind::tanh: return 1.0 - y * y;
        case TransferKind::relu: return y > 0.0 ? 1.0 : 0.0;
        case TransferKind::identity: return 1.0;
    }
    throw std::invalid_argument("transfer_derivative_from_output: unknown kind");
}

Matrix transfer(TransferKind kind, const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.values()[i] = transfer_scalar(kind, x.values()[i]);
    }
    return out;
}

const char* transfer_name(TransferKind kind) {
    switch (kind) {
        case TransferKind::sigmoid: return "sigmoid";
        case TransferKind::tanh: return "tanh";
        case TransferKind::relu: return "relu";
        case TransferKind::identity: return "identity";
    }
    return "?";
}

TransferKind parse_transfer(const std::string& name) {
    if (name == "sigmoid") return TransferKind::sigmoid;
    if (name == "tanh") return TransferKind::tanh;
    if (name == "relu") return TransferKind::relu;
    if (name == "identity") return TransferKind::identity;
    throw std::invalid_argument("unknown transfer function \"" + name +
                                "\" (expected sigmoid, tanh, relu or identity)");
}

}  // namespace mclnn
