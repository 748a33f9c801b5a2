#include "fopsim/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "fopsim/rng.hpp"
#include "fopsim/units.hpp"

namespace fopsim {

using nlohmann::json;

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "proposed") return Algorithm::Proposed;
    if (name == "droo") return Algorithm::Droo;
    if (name == "knn") return Algorithm::Knn;
    if (name == "heuristic") return Algorithm::Heuristic;
    throw std::invalid_argument("unknown algorithm: " + name);
}

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Proposed: return "proposed";
        case Algorithm::Droo: return "droo";
        case Algorithm::Knn: return "knn";
        case Algorithm::Heuristic: return "heuristic";
    }
    return "?";
}

int SimConfig::effective_decode_capacity() const {
    if (decode_capacity > 0) return decode_capacity;
    switch (n_users) {  // reference (N, M~) pairs
        case 8: return 3;
        case 12: return 5;
        case 16: return 6;
        case 20: return 7;
        default: return std::max(1, static_cast<int>(std::lround(0.35 * n_users)));
    }
}

long SimConfig::effective_epochs() const {
    if (pretrain_realizations > 0)
        return std::max<long>(1, pretrain_realizations / n_episodes);
    return n_epochs;
}

void SimConfig::validate() const {
    if (n_users < 1 || n_aps < 1 || n_elements < 1)
        throw std::invalid_argument("topology counts must be positive");
    if (slots < 0) throw std::invalid_argument("slots must be >= 0");
    radio_params().validate();
    for (const auto& ap : ap_configs()) ap.validate();
    if (dbm_to_watt(hmd_circuit_power_dbm) >= dbm_to_watt(hmd_max_power_dbm))
        throw std::invalid_argument("HMD circuit power must be below max power");
    if (esn_window < 1 || horizon < 0) throw std::invalid_argument("bad ESN window/horizon");
    if (esn_damping != "full" && esn_damping != "harmonic")
        throw std::invalid_argument("esn_damping must be full|harmonic");
    if (batch_size < 1 || train_interval < 1)
        throw std::invalid_argument("bad training parameters");
    if (speed_min < 0 || speed_max < speed_min)
        throw std::invalid_argument("bad speed range");
    if (trace_pattern != "grid" && trace_pattern != "box")
        throw std::invalid_argument("trace_pattern must be grid|box");
}

RadioParams SimConfig::radio_params() const {
    RadioParams r;
    r.carrier_freq = carrier_freq_hz;
    r.light_speed = light_speed;
    r.noise_psd = dbm_to_watt(noise_psd_dbm_hz);
    r.ul_bandwidth = ul_bandwidth_hz;
    r.dl_bandwidth = dl_bandwidth_hz;
    r.ul_snr_threshold = ul_snr_threshold;
    r.dl_rate_threshold = dl_rate_threshold_bps;
    r.ul_fading_exponent = ul_fading_exponent;
    r.rayleigh_gain = Eigen::MatrixXd::Constant(n_users, n_aps, rayleigh_gain);
    r.pathloss_exp_los = pathloss_exp_los;
    r.pathloss_exp_nlos = pathloss_exp_nlos;
    r.shadow_var_los = shadow_var_los_db2;
    r.shadow_var_nlos = shadow_var_nlos_db2;
    r.blockage_angle = blockage_angle_rad;
    r.interference_radius = interference_radius_m;
    r.area_center = Vec2(area_size_m / 2.0, area_size_m / 2.0);
    return r;
}

std::vector<ApConfig> SimConfig::ap_configs() const {
    std::vector<ApConfig> aps(n_aps);
    const Vec2 center(area_size_m / 2.0, area_size_m / 2.0);
    for (int j = 0; j < n_aps; ++j) {
        auto& ap = aps[j];
        const double angle = 2.0 * M_PI * j / n_aps + M_PI / 2.0;
        ap.position = center + ap_ring_radius_m * Vec2(std::cos(angle), std::sin(angle));
        ap.antenna_height = ap_height_m;
        ap.downtilt = ap_downtilt_rad;
        ap.mainlobe_gain = db_to_linear(mainlobe_gain_db);
        ap.sidelobe_gain = db_to_linear(sidelobe_gain_db);
        ap.beamwidth = beamwidth_rad;
        ap.num_elements = n_elements;
        ap.max_power = dbm_to_watt(ap_max_power_dbm);
        ap.circuit_power = dbm_to_watt(ap_circuit_power_dbm);
        ap.decode_capacity = effective_decode_capacity();
    }
    return aps;
}

NetworkScene SimConfig::make_scene() const {
    NetworkScene scene;
    scene.aps = ap_configs();
    scene.radio = radio_params();
    scene.users.resize(n_users);
    auto rng = make_rng(seed, streams::scene);
    std::normal_distribution<double> height(mean_height_m, std::sqrt(height_var_m2));
    for (auto& u : scene.users) {
        u.height = std::clamp(height(rng), 1.4, 2.2);
        u.hmd_circuit_power = dbm_to_watt(hmd_circuit_power_dbm);
        u.hmd_max_power = dbm_to_watt(hmd_max_power_dbm);
        u.hmd_tx_power = 0.0;
    }
    return scene;
}

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SimConfig config_from_json(const std::string& text) {
    json j = json::parse(text);
    SimConfig c;
    get_if(j, "n_users", c.n_users);
    get_if(j, "n_aps", c.n_aps);
    get_if(j, "n_elements", c.n_elements);
    get_if(j, "decode_capacity", c.decode_capacity);
    get_if(j, "area_size_m", c.area_size_m);
    get_if(j, "ap_ring_radius_m", c.ap_ring_radius_m);
    get_if(j, "ap_height_m", c.ap_height_m);
    get_if(j, "ap_downtilt_rad", c.ap_downtilt_rad);
    get_if(j, "mainlobe_gain_db", c.mainlobe_gain_db);
    get_if(j, "sidelobe_gain_db", c.sidelobe_gain_db);
    get_if(j, "beamwidth_rad", c.beamwidth_rad);
    get_if(j, "blockage_angle_rad", c.blockage_angle_rad);
    get_if(j, "ap_max_power_dbm", c.ap_max_power_dbm);
    get_if(j, "ap_circuit_power_dbm", c.ap_circuit_power_dbm);
    get_if(j, "carrier_freq_hz", c.carrier_freq_hz);
    get_if(j, "light_speed", c.light_speed);
    get_if(j, "noise_psd_dbm_hz", c.noise_psd_dbm_hz);
    get_if(j, "ul_bandwidth_hz", c.ul_bandwidth_hz);
    get_if(j, "dl_bandwidth_hz", c.dl_bandwidth_hz);
    get_if(j, "ul_snr_threshold", c.ul_snr_threshold);
    get_if(j, "dl_rate_threshold_bps", c.dl_rate_threshold_bps);
    get_if(j, "ul_fading_exponent", c.ul_fading_exponent);
    get_if(j, "rayleigh_gain", c.rayleigh_gain);
    get_if(j, "pathloss_exp_los", c.pathloss_exp_los);
    get_if(j, "pathloss_exp_nlos", c.pathloss_exp_nlos);
    get_if(j, "shadow_var_los_db2", c.shadow_var_los_db2);
    get_if(j, "shadow_var_nlos_db2", c.shadow_var_nlos_db2);
    get_if(j, "interference_radius_m", c.interference_radius_m);
    get_if(j, "hmd_circuit_power_dbm", c.hmd_circuit_power_dbm);
    get_if(j, "hmd_max_power_dbm", c.hmd_max_power_dbm);
    get_if(j, "mean_height_m", c.mean_height_m);
    get_if(j, "height_var_m2", c.height_var_m2);
    get_if(j, "esn_zeta", c.esn_zeta);
    get_if(j, "esn_xi", c.esn_xi);
    get_if(j, "esn_max_rounds", c.esn_max_rounds);
    get_if(j, "esn_window", c.esn_window);
    get_if(j, "horizon", c.horizon);
    get_if(j, "esn_inputs", c.esn_inputs);
    get_if(j, "esn_outputs", c.esn_outputs);
    get_if(j, "esn_reservoir", c.esn_reservoir);
    get_if(j, "esn_train_interval", c.esn_train_interval);
    get_if(j, "esn_spectral_rescale", c.esn_spectral_rescale);
    get_if(j, "esn_damping", c.esn_damping);
    get_if(j, "hidden1", c.hidden1);
    get_if(j, "hidden2", c.hidden2);
    get_if(j, "replay_capacity", c.replay_capacity);
    get_if(j, "n_episodes", c.n_episodes);
    get_if(j, "n_epochs", c.n_epochs);
    get_if(j, "pretrain_realizations", c.pretrain_realizations);
    get_if(j, "penalty_weight", c.penalty_weight);
    get_if(j, "noise_var", c.noise_var);
    get_if(j, "epsilon_initial", c.epsilon_initial);
    get_if(j, "epsilon_floor", c.epsilon_floor);
    get_if(j, "epsilon_decay", c.epsilon_decay);
    get_if(j, "lr_ul", c.lr_ul);
    get_if(j, "lr_dl", c.lr_dl);
    get_if(j, "batch_size", c.batch_size);
    get_if(j, "train_interval", c.train_interval);
    get_if(j, "reward_circuit_power", c.reward_circuit_power);
    get_if(j, "slots", c.slots);
    get_if(j, "seed", c.seed);
    if (j.contains("algorithm")) c.algorithm = algorithm_from_string(j.at("algorithm"));
    get_if(j, "trace_file", c.trace_file);
    get_if(j, "trace_pattern", c.trace_pattern);
    get_if(j, "roam_half_width_m", c.roam_half_width_m);
    get_if(j, "speed_min", c.speed_min);
    get_if(j, "speed_max", c.speed_max);
    return c;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string config_to_json(const SimConfig& c) {
    json j;
    j["n_users"] = c.n_users;
    j["n_aps"] = c.n_aps;
    j["n_elements"] = c.n_elements;
    j["decode_capacity"] = c.decode_capacity;
    j["area_size_m"] = c.area_size_m;
    j["ap_ring_radius_m"] = c.ap_ring_radius_m;
    j["ap_height_m"] = c.ap_height_m;
    j["ap_downtilt_rad"] = c.ap_downtilt_rad;
    j["mainlobe_gain_db"] = c.mainlobe_gain_db;
    j["sidelobe_gain_db"] = c.sidelobe_gain_db;
    j["beamwidth_rad"] = c.beamwidth_rad;
    j["blockage_angle_rad"] = c.blockage_angle_rad;
    j["ap_max_power_dbm"] = c.ap_max_power_dbm;
    j["ap_circuit_power_dbm"] = c.ap_circuit_power_dbm;
    j["carrier_freq_hz"] = c.carrier_freq_hz;
    j["light_speed"] = c.light_speed;
    j["noise_psd_dbm_hz"] = c.noise_psd_dbm_hz;
    j["ul_bandwidth_hz"] = c.ul_bandwidth_hz;
    j["dl_bandwidth_hz"] = c.dl_bandwidth_hz;
    j["ul_snr_threshold"] = c.ul_snr_threshold;
    j["dl_rate_threshold_bps"] = c.dl_rate_threshold_bps;
    j["ul_fading_exponent"] = c.ul_fading_exponent;
    j["rayleigh_gain"] = c.rayleigh_gain;
    j["pathloss_exp_los"] = c.pathloss_exp_los;
    j["pathloss_exp_nlos"] = c.pathloss_exp_nlos;
    j["shadow_var_los_db2"] = c.shadow_var_los_db2;
    j["shadow_var_nlos_db2"] = c.shadow_var_nlos_db2;
    j["interference_radius_m"] = c.interference_radius_m;
    j["hmd_circuit_power_dbm"] = c.hmd_circuit_power_dbm;
    j["hmd_max_power_dbm"] = c.hmd_max_power_dbm;
    j["mean_height_m"] = c.mean_height_m;
    j["height_var_m2"] = c.height_var_m2;
    j["esn_zeta"] = c.esn_zeta;
    j["esn_xi"] = c.esn_xi;
    j["esn_max_rounds"] = c.esn_max_rounds;
    j["esn_window"] = c.esn_window;
    j["horizon"] = c.horizon;
    j["esn_inputs"] = c.esn_inputs;
    j["esn_outputs"] = c.esn_outputs;
    j["esn_reservoir"] = c.esn_reservoir;
    j["esn_train_interval"] = c.esn_train_interval;
    j["esn_spectral_rescale"] = c.esn_spectral_rescale;
    j["esn_damping"] = c.esn_damping;
    j["hidden1"] = c.hidden1;
    j["hidden2"] = c.hidden2;
    j["replay_capacity"] = c.replay_capacity;
    j["n_episodes"] = c.n_episodes;
    j["n_epochs"] = c.n_epochs;
    j["pretrain_realizations"] = c.pretrain_realizations;
    j["penalty_weight"] = c.penalty_weight;
    j["noise_var"] = c.noise_var;
    j["epsilon_initial"] = c.epsilon_initial;
    j["epsilon_floor"] = c.epsilon_floor;
    j["epsilon_decay"] = c.epsilon_decay;
    j["lr_ul"] = c.lr_ul;
    j["lr_dl"] = c.lr_dl;
    j["batch_size"] = c.batch_size;
    j["train_interval"] = c.train_interval;
    j["reward_circuit_power"] = c.reward_circuit_power;
    j["slots"] = c.slots;
    j["seed"] = c.seed;
    j["algorithm"] = to_string(c.algorithm);
    j["trace_file"] = c.trace_file;
    j["trace_pattern"] = c.trace_pattern;
    j["roam_half_width_m"] = c.roam_half_width_m;
    j["speed_min"] = c.speed_min;
    j["speed_max"] = c.speed_max;
    return j.dump(2);
}

}  // namespace fopsim
