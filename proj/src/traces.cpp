#include "fopsim/traces.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fopsim {

Eigen::Vector2d TraceSet::direction(long slot, int user) const {
    if (slot == 0) return position(0, user);
    return position(slot, user) - position(slot - 1, user);
}

TraceSet synth_traces(int users, long slots, std::mt19937_64& rng,
                      const SynthOptions& opts) {
    const double lo_x = std::max(0.0, opts.box_center.x() - opts.box_half_width);
    const double hi_x = std::min(opts.area_size, opts.box_center.x() + opts.box_half_width);
    const double lo_y = std::max(0.0, opts.box_center.y() - opts.box_half_width);
    const double hi_y = std::min(opts.area_size, opts.box_center.y() + opts.box_half_width);
    std::uniform_real_distribution<double> speed(opts.speed_min, opts.speed_max);
    std::uniform_int_distribution<int> pause(0, opts.pause_max);
    const int grid = static_cast<int>(std::ceil(std::sqrt(double(users))));

    TraceSet t;
    t.xs.resize(slots, users);
    t.ys.resize(slots, users);
    t.provenance = "synthetic";
    for (int u = 0; u < users; ++u) {
        double ux0 = lo_x, ux1 = hi_x, uy0 = lo_y, uy1 = hi_y;
        if (opts.per_user_cells) {
            const double cell_w = (hi_x - lo_x) / grid;
            const double cell_h = (hi_y - lo_y) / grid;
            const double mx = opts.cell_margin * cell_w;
            const double my = opts.cell_margin * cell_h;
            ux0 = lo_x + (u % grid) * cell_w + mx;
            ux1 = lo_x + (u % grid + 1) * cell_w - mx;
            uy0 = lo_y + (u / grid) * cell_h + my;
            uy1 = lo_y + (u / grid + 1) * cell_h - my;
        }
        std::uniform_real_distribution<double> px(ux0, ux1);
        std::uniform_real_distribution<double> py(uy0, uy1);
        Eigen::Vector2d pos(px(rng), py(rng));
        Eigen::Vector2d target(px(rng), py(rng));
        double v = speed(rng);
        int dwell = 0;
        for (long s = 0; s < slots; ++s) {
            t.xs(s, u) = pos.x();
            t.ys(s, u) = pos.y();
            if (dwell > 0) {
                --dwell;
                continue;
            }
            const Eigen::Vector2d to_target = target - pos;
            const double dist = to_target.norm();
            if (dist <= v) {
                pos = target;
                target = Eigen::Vector2d(px(rng), py(rng));
                v = speed(rng);
                dwell = pause(rng);
            } else if (dist > 0.0) {
                pos += v * to_target / dist;
            }
        }
    }
    return t;
}

TraceSet read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty trace file");
    if (line.rfind("user_id,slot,x_m,y_m", 0) != 0)
        throw std::runtime_error("trace CSV header must be user_id,slot,x_m,y_m");

    std::map<int, std::map<long, Eigen::Vector2d>> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        int user;
        long slot;
        double x, y;
        try {
            std::getline(ss, field, ',');
            user = std::stoi(field);
            std::getline(ss, field, ',');
            slot = std::stol(field);
            std::getline(ss, field, ',');
            x = std::stod(field);
            std::getline(ss, field, ',');
            y = std::stod(field);
        } catch (const std::exception&) {
            throw std::runtime_error("malformed trace row at line " + std::to_string(lineno));
        }
        auto& series = rows[user];
        if (!series.empty() && slot <= series.rbegin()->first)
            throw std::runtime_error("non-monotone slots for user " + std::to_string(user));
        series[slot] = Eigen::Vector2d(x, y);
    }
    if (rows.empty()) throw std::runtime_error("trace file holds no rows");

    long slots = -1;
    for (const auto& [user, series] : rows) {
        if (series.begin()->first != 1)
            throw std::runtime_error("slots must start at 1 for user " + std::to_string(user));
        const long count = static_cast<long>(series.size());
        if (series.rbegin()->first != count)
            throw std::runtime_error("slots must be contiguous for user " +
                                     std::to_string(user));
        if (slots < 0) slots = count;
        if (count != slots) throw std::runtime_error("users have differing trace lengths");
    }

    TraceSet t;
    t.xs.resize(slots, rows.size());
    t.ys.resize(slots, rows.size());
    t.provenance = "ingested";
    int u = 0;
    for (const auto& [user, series] : rows) {
        for (const auto& [slot, pos] : series) {
            t.xs(slot - 1, u) = pos.x();
            t.ys(slot - 1, u) = pos.y();
        }
        ++u;
    }
    return t;
}

void write_trace_csv(const std::string& path, const TraceSet& traces) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << "user_id,slot,x_m,y_m\n";
    for (int u = 0; u < traces.users(); ++u)
        for (long s = 0; s < traces.slots(); ++s) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%d,%ld,%.9f,%.9f\n", u, s + 1,
                          traces.xs(s, u), traces.ys(s, u));
            out << buf;
        }
}

TraceSet zoom_traces(const TraceSet& raw, double area_size) {
    const double min_x = raw.xs.minCoeff(), max_x = raw.xs.maxCoeff();
    const double min_y = raw.ys.minCoeff(), max_y = raw.ys.maxCoeff();
    const double width = max_x - min_x, height = max_y - min_y;
    double scale = 1.0;  // zoom never upscales: in-bounds data only recenters
    if (width > area_size || height > area_size)
        scale = std::min(width > 0 ? area_size / width : 1.0,
                         height > 0 ? area_size / height : 1.0);
    const Eigen::Vector2d center((min_x + max_x) / 2.0, (min_y + max_y) / 2.0);
    const Eigen::Vector2d target(area_size / 2.0, area_size / 2.0);

    TraceSet out = raw;
    out.xs = ((raw.xs.array() - center.x()) * scale + target.x()).matrix();
    out.ys = ((raw.ys.array() - center.y()) * scale + target.y()).matrix();
    return out;
}

TraceSet ingest_traces(const std::string& path, double area_size) {
    return zoom_traces(read_trace_csv(path), area_size);
}

}  // namespace fopsim
