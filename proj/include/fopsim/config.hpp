#pragma once

#include <cstdint>
#include <string>

#include "fopsim/net_model.hpp"

namespace fopsim {

enum class Algorithm { Proposed, Droo, Knn, Heuristic };

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm a);

// Every scenario constant in named, unit-tagged fields. Defaults reproduce
// the reference parameter set; dB/dBm fields convert at the boundary.
struct SimConfig {
    // Topology
    int n_users = 16;                 // N
    int n_aps = 3;                    // J
    int n_elements = 2;               // K
    int decode_capacity = 0;          // M~; 0 = derive from n_users pairing
    double area_size_m = 500.0;       // side of the square service area
    double ap_ring_radius_m = 100.0;  // AP circle around the area center
    double ap_height_m = 5.5;         // H_j
    double ap_downtilt_rad = M_PI / 3.0;   // theta_j
    double mainlobe_gain_db = 5.0;         // G
    double sidelobe_gain_db = 1.0;         // g
    double beamwidth_rad = M_PI / 3.0;     // phi
    double blockage_angle_rad = M_PI / 2.0;// vartheta
    double ap_max_power_dbm = 40.0;        // E~_j
    double ap_circuit_power_dbm = 30.0;    // E^c_j

    // Radio
    double carrier_freq_hz = 28e9;     // f_c
    double light_speed = 3.0e8;        // c
    double noise_psd_dbm_hz = -167.0;  // N_0
    double ul_bandwidth_hz = 200e6;    // W^ul
    double dl_bandwidth_hz = 800e6;    // W^dl
    double ul_snr_threshold = 200.0;   // theta^th (linear)
    double dl_rate_threshold_bps = 1e9;// gamma^th
    double ul_fading_exponent = 5.0;   // alpha
    double rayleigh_gain = 0.3;        // c_ij
    double pathloss_exp_los = 2.0;     // eta_LoS
    double pathloss_exp_nlos = 2.4;    // eta_NLoS
    double shadow_var_los_db2 = 5.3;   // sigma^2_LoS
    double shadow_var_nlos_db2 = 5.27; // sigma^2_NLoS
    double interference_radius_m = 50.0;  // D^th

    // Users
    double hmd_circuit_power_dbm = 23.0;  // p^c
    double hmd_max_power_dbm = 27.0;      // p~
    double mean_height_m = 1.8;           // h-bar
    double height_var_m2 = 0.05;          // sigma_h^2

    // ESN
    double esn_zeta = 1.0;         // strong convexity
    double esn_xi = 0.25;          // regularization
    int esn_max_rounds = 1000;     // r-bar_max
    int esn_window = 6;            // Q
    int horizon = 8;               // M
    int esn_inputs = 2;            // N_i
    int esn_outputs = 2;           // N_o
    int esn_reservoir = 300;       // N_r
    int esn_train_interval = 5;    // T_pr
    bool esn_spectral_rescale = false;
    std::string esn_damping = "full";  // or "harmonic"

    // Policy nets / DRL
    int hidden1 = 120;
    int hidden2 = 80;
    std::size_t replay_capacity = 1000000;  // C
    int n_episodes = 10;                    // N_epi
    int n_epochs = 1000;                    // N_epo
    long pretrain_realizations = 10000;     // n_episodes * n_epochs when set
    double penalty_weight = 10.0;           // varpi
    double noise_var = 0.36;                // sigma^2
    double epsilon_initial = 0.99;
    double epsilon_floor = 0.01;
    double epsilon_decay = 0.999;
    double lr_ul = 0.1;
    double lr_dl = 0.01;
    int batch_size = 64;   // |T_t|
    int train_interval = 20;  // T_ti
    bool reward_circuit_power = true;  // keep p^c inside the reward penalty

    // Run control
    long slots = 5000;     // T
    std::uint64_t seed = 1;
    Algorithm algorithm = Algorithm::Proposed;
    std::string trace_file;        // optional CSV; empty = synthetic walks
    std::string trace_pattern = "grid";  // grid: per-user cells; box: shared roam box
    double roam_half_width_m = 250.0;    // synthetic-walk box around the center
    double speed_min = 0.5;              // [m/slot]
    double speed_max = 2.0;

    int effective_decode_capacity() const;
    long effective_epochs() const;  // pretrain_realizations / n_episodes

    void validate() const;

    RadioParams radio_params() const;
    std::vector<ApConfig> ap_configs() const;

    // Scene with user heights drawn from the scene stream and users placed
    // at the first trace slot.
    NetworkScene make_scene() const;
};

SimConfig load_config(const std::string& path);
std::string config_to_json(const SimConfig& cfg);
SimConfig config_from_json(const std::string& text);

}  // namespace fopsim
