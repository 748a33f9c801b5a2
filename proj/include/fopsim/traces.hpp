#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>

namespace fopsim {

// Per-user 2D position series; row = slot, column = user.
struct TraceSet {
    Eigen::MatrixXd xs;  // slots x users [m]
    Eigen::MatrixXd ys;
    std::string provenance = "synthetic";  // or "ingested"
    double slot_duration_s = 1.0;          // metadata only

    long slots() const { return xs.rows(); }
    int users() const { return static_cast<int>(xs.cols()); }
    Eigen::Vector2d position(long slot, int user) const {
        return {xs(slot, user), ys(slot, user)};
    }
    // Displacement from the previous slot; the position itself at slot 0.
    Eigen::Vector2d direction(long slot, int user) const;
};

struct SynthOptions {
    double area_size = 500.0;
    Eigen::Vector2d box_center{250.0, 250.0};
    double box_half_width = 250.0;  // roam box, clipped to the area
    double speed_min = 0.5;         // [m/slot]
    double speed_max = 2.0;
    int pause_max = 3;              // waypoint dwell [slots]
    // Per-user neighbourhoods: each user roams one cell of a sqrt(N) grid
    // over the area (keeps users spread out, downlink conflicts rare).
    bool per_user_cells = false;
    double cell_margin = 0.12;  // fraction of the cell kept clear per side
};

// Random-waypoint walks: bounded speed, piecewise-linear segments with short
// pauses, seeded and reproducible.
TraceSet synth_traces(int users, long slots, std::mt19937_64& rng,
                      const SynthOptions& opts = {});

// CSV schema: header `user_id,slot,x_m,y_m`, slots contiguous from 1.
TraceSet read_trace_csv(const std::string& path);
void write_trace_csv(const std::string& path, const TraceSet& traces);

// Affine zoom of all users' series into [0, area]^2: uniform scale (never
// upscaling), aspect preserved, bounding box centered.
TraceSet zoom_traces(const TraceSet& raw, double area_size = 500.0);

// read + zoom.
TraceSet ingest_traces(const std::string& path, double area_size = 500.0);

}  // namespace fopsim
