#ifndef DEPTHSIGN_DEPTHSIGN_HPP
#define DEPTHSIGN_DEPTHSIGN_HPP

// Umbrella header for the depthsign library: a stacked sparse-autoencoder
// classifier for depth-image sign recognition, with deterministic seeded
// training and the full evaluation tool chain.

#include "depthsign/autoencoder.hpp"
#include "depthsign/classifier.hpp"
#include "depthsign/config.hpp"
#include "depthsign/data.hpp"
#include "depthsign/errors.hpp"
#include "depthsign/io.hpp"
#include "depthsign/matrix.hpp"
#include "depthsign/metrics.hpp"
#include "depthsign/optimizer.hpp"
#include "depthsign/rng.hpp"
#include "depthsign/stack.hpp"

#endif // DEPTHSIGN_DEPTHSIGN_HPP
