#include "bevkit/loss/losses.hpp"

#include <stdexcept>

namespace bevkit::loss {

RecVariant rec_variant_from_string(const std::string& name) {
    if (name == "l2") return RecVariant::L2;
    if (name == "l1") return RecVariant::L1;
    if (name == "kl") return RecVariant::KL;
    throw std::invalid_argument("unknown reconstruction loss variant: " + name);
}

std::string rec_variant_to_string(RecVariant variant) {
    switch (variant) {
        case RecVariant::L2: return "l2";
        case RecVariant::L1: return "l1";
        case RecVariant::KL: return "kl";
    }
    return "l2";
}

} // namespace bevkit::loss
