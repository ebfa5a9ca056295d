#pragma once

#include "partprompt/feature.hpp"

namespace partprompt {

/// Both return 1.0 when prediction and truth are empty. DimMismatch on
/// differing grids.
double dice(const BinaryMask& predicted, const BinaryMask& truth);
double iou(const BinaryMask& predicted, const BinaryMask& truth);

}  // namespace partprompt
