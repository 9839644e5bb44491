#pragma once

// Internal training interface between the generic train loop and the
// concrete regressors. Not part of the public API.

#include <vector>

#include "ga/estimator.hpp"

namespace ga::estimator::detail {

using GradBuffer = std::vector<std::vector<float>>;  // parallels params()

class TrainableNet {
public:
    virtual ~TrainableNet() = default;

    // Number of dropout units (the hidden layer width).
    virtual int dropout_units() const = 0;

    // Validates the item against the net's expected input layout.
    virtual void check_item(const TrainItem& item) const = 0;

    // Forward + backward for one sample; accumulates parameter gradients
    // into grad (pre-zeroed, sized like params()) and returns the sample's
    // NLL loss. Thread-safe: touches no mutable net state.
    virtual double loss_and_grad(const TrainItem& item,
                                 const imaging::AugmentParams& aug,
                                 const std::vector<float>& dropout_mask,
                                 double target_t, GradBuffer& grad) const = 0;
};

TrainableNet* as_trainable(Predictor& predictor);

imaging::Frame item_frame(const TrainItem& item, int frame_index);

}  // namespace ga::estimator::detail
