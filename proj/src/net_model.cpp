#include "fopsim/net_model.hpp"

#include <cmath>
#include <stdexcept>

#include "fopsim/units.hpp"

namespace fopsim {

namespace {

Vec3 user_point(const UserState& u) { return {u.position.x(), u.position.y(), u.height}; }
Vec3 ap_point(const ApConfig& a) { return {a.position.x(), a.position.y(), a.antenna_height}; }

double angle_between(const Vec3& a, const Vec3& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw std::domain_error("angle of zero-length vector");
    const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    return std::acos(c);
}

}  // namespace

void ApConfig::validate() const {
    if (antenna_height <= 0.0 || max_power <= 0.0 || circuit_power <= 0.0 ||
        mainlobe_gain <= 0.0 || sidelobe_gain <= 0.0)
        throw std::invalid_argument("AP heights/powers/gains must be positive");
    if (!(beamwidth > 0.0 && beamwidth < M_PI))
        throw std::invalid_argument("beamwidth must lie in (0, pi)");
    if (!(downtilt > 0.0 && downtilt < M_PI / 2.0))
        throw std::invalid_argument("downtilt must lie in (0, pi/2)");
    if (circuit_power >= max_power)
        throw std::invalid_argument("AP circuit power must be below max power");
    if (num_elements <= 0 || decode_capacity <= 0)
        throw std::invalid_argument("num_elements and decode_capacity must be positive");
}

void UserState::validate() const {
    if (height <= 0.0) throw std::invalid_argument("user height must be positive");
    if (hmd_tx_power < 0.0 || hmd_tx_power > power_budget())
        throw std::invalid_argument("HMD transmit power outside [0, p~ - p^c]");
}

void RadioParams::validate() const {
    if (carrier_freq <= 0 || light_speed <= 0 || noise_psd <= 0 || ul_bandwidth <= 0 ||
        dl_bandwidth <= 0 || ul_snr_threshold <= 0 || dl_rate_threshold <= 0 ||
        ul_fading_exponent <= 0 || pathloss_exp_los <= 0 || shadow_var_los <= 0 ||
        shadow_var_nlos <= 0 || blockage_angle <= 0 || interference_radius <= 0)
        throw std::invalid_argument("radio parameters must be positive");
    if (pathloss_exp_nlos < pathloss_exp_los)
        throw std::invalid_argument("eta_NLoS must be >= eta_LoS");
    if ((rayleigh_gain.array() <= 0.0).any())
        throw std::invalid_argument("rayleigh gains must be positive");
}

double ul_pathloss(const UserState& user, const ApConfig& ap, const RadioParams& radio) {
    const double d = (user_point(user) - ap_point(ap)).norm();
    if (d <= 0.0) throw std::domain_error("coincident user and AP positions");
    return std::pow(d, -radio.ul_fading_exponent);
}

double ul_snr(bool assoc, double tx_power, double rayleigh_gain, double pathloss,
              const RadioParams& radio, int n_users) {
    if (n_users < 1) throw std::invalid_argument("n_users must be >= 1");
    const double noise = radio.noise_psd * radio.ul_bandwidth / n_users;
    return (assoc ? 1.0 : 0.0) * tx_power * rayleigh_gain * pathloss / noise;
}

double tilt_angle(const UserState& user, const ApConfig& ap, const RadioParams& radio) {
    const double r = (radio.area_center - ap.position).norm();
    if (r == 0.0) throw std::domain_error("AP at area center: boresight undefined");
    const double d = ap.antenna_height / std::tan(ap.downtilt);
    const Vec2 boresight_2d = ap.position + d * (radio.area_center - ap.position) / r;
    const Vec3 to_boresight(boresight_2d.x() - ap.position.x(),
                            boresight_2d.y() - ap.position.y(), -ap.antenna_height);
    const Vec3 to_user(user.position.x() - ap.position.x(),
                       user.position.y() - ap.position.y(),
                       user.height - ap.antenna_height);
    return angle_between(to_boresight, to_user);
}

double antenna_gain(const UserState& user, const ApConfig& ap, const RadioParams& radio) {
    return tilt_angle(user, ap, radio) <= ap.beamwidth / 2.0 ? ap.mainlobe_gain
                                                             : ap.sidelobe_gain;
}

double orientation_angle(const UserState& user, const ApConfig& ap) {
    const Vec2 to_ap = ap.position - user.position;
    if (user.direction.norm() == 0.0)
        throw std::domain_error("zero direction vector: orientation undefined");
    if (to_ap.norm() == 0.0) throw std::domain_error("user at AP ground position");
    const double c = std::clamp(to_ap.dot(user.direction) /
                                    (to_ap.norm() * user.direction.norm()),
                                -1.0, 1.0);
    return std::acos(c);
}

bool blocked(const UserState& user, const ApConfig& ap, const RadioParams& radio) {
    return orientation_angle(user, ap) > radio.blockage_angle;
}

Eigen::VectorXcd dl_channel(const UserState& user, const ApConfig& ap,
                            const RadioParams& radio, bool is_blocked, double gain,
                            std::mt19937_64& rng) {
    const double d = (user_point(user) - ap_point(ap)).norm();
    if (d <= 0.0) throw std::domain_error("coincident user and AP positions");
    const double eta = is_blocked ? radio.pathloss_exp_nlos : radio.pathloss_exp_los;
    const double sigma = std::sqrt(is_blocked ? radio.shadow_var_nlos : radio.shadow_var_los);
    const double base_db = 10.0 * eta * std::log10(d) +
                           20.0 * std::log10(4.0 * M_PI * radio.carrier_freq / radio.light_speed) +
                           10.0 * std::log10(gain);
    std::normal_distribution<double> shadow(0.0, sigma > 0.0 ? sigma : 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    Eigen::VectorXcd h(ap.num_elements);
    for (int k = 0; k < ap.num_elements; ++k) {
        const double mu = sigma > 0.0 ? shadow(rng) : 0.0;
        const double mag = std::sqrt(db_to_linear(base_db + mu));
        const double ph = phase(rng);
        h(k) = std::polar(mag, ph);
    }
    return h;
}

std::vector<std::vector<int>> interferers(const std::vector<UserState>& users,
                                          const RadioParams& radio) {
    const int n = static_cast<int>(users.size());
    std::vector<std::vector<int>> sets(n);
    for (int i = 0; i < n; ++i)
        for (int m = 0; m < n; ++m)
            if (m != i &&
                (users[m].position - users[i].position).norm() < radio.interference_radius)
                sets[i].push_back(m);
    return sets;
}

double received_power(const Eigen::VectorXcd& stacked_channel,
                      const Eigen::VectorXcd& stacked_beam) {
    return std::norm(stacked_channel.dot(stacked_beam));  // Eigen dot conjugates lhs
}

double dl_rate(int user, const Eigen::VectorXi& dl_serve, const ChannelRealization& channel,
               const BeamformerSet& beams, const RadioParams& radio) {
    if (dl_serve(user) == 0) return 0.0;
    if (!beams.has(user)) throw std::invalid_argument("served user without beamformer");
    const double signal = received_power(channel.dl_channel[user], beams.stacked[user]);
    double interference = 0.0;
    for (int m : channel.interferers[user]) {
        if (dl_serve(m) == 0 || !beams.has(m)) continue;
        interference += received_power(channel.dl_channel[m], beams.stacked[m]);
    }
    const double noise = radio.noise_psd * radio.dl_bandwidth;
    return radio.dl_bandwidth * std::log2(1.0 + signal / (noise + interference));
}

ChannelRealization make_channel(const NetworkScene& scene, std::mt19937_64& rng) {
    const int n = scene.num_users();
    const int j = scene.num_aps();
    ChannelRealization ch;
    ch.ul_pathloss.resize(n, j);
    ch.blockage.resize(n, j);
    ch.antenna_gain.resize(n, j);
    ch.dl_channel.resize(n);
    for (int i = 0; i < n; ++i) {
        const int k = scene.num_elements();
        Eigen::VectorXcd stacked(j * k);
        for (int a = 0; a < j; ++a) {
            const auto& user = scene.users[i];
            const auto& ap = scene.aps[a];
            ch.ul_pathloss(i, a) = ul_pathloss(user, ap, scene.radio);
            ch.blockage(i, a) = blocked(user, ap, scene.radio) ? 1 : 0;
            ch.antenna_gain(i, a) = antenna_gain(user, ap, scene.radio);
            stacked.segment(a * k, k) =
                dl_channel(user, ap, scene.radio, ch.blockage(i, a) == 1,
                           ch.antenna_gain(i, a), rng);
        }
        ch.dl_channel[i] = std::move(stacked);
    }
    ch.interferers = interferers(scene.users, scene.radio);
    return ch;
}

double ap_transmit_power(const Eigen::VectorXi& dl_serve, const BeamformerSet& beams,
                         int ap_index, int num_elements) {
    double total = 0.0;
    for (int i = 0; i < dl_serve.size(); ++i) {
        if (dl_serve(i) == 0 || !beams.has(i)) continue;
        total += beams.stacked[i].segment(ap_index * num_elements, num_elements).squaredNorm();
    }
    return total;
}

bool ap_power_check(const Eigen::VectorXi& dl_serve, const BeamformerSet& beams,
                    const ApConfig& ap, int ap_index) {
    return ap_transmit_power(dl_serve, beams, ap_index, ap.num_elements) +
               ap.circuit_power <=
           ap.max_power;
}

bool hmd_power_check(const UserState& user) {
    return user.hmd_tx_power + user.hmd_circuit_power <= user.hmd_max_power;
}

FopSummary fop_objective(const std::vector<SlotDecision>& window,
                         const std::vector<UserState>& users) {
    if (window.empty()) throw std::invalid_argument("empty decision window");
    const double n = static_cast<double>(users.size());
    FopSummary out;
    double penalty = 0.0;
    for (const auto& d : window) {
        const double b_ul = d.ul_assoc.sum() / n;
        const double b_dl = d.dl_serve.cast<double>().sum() / n;
        out.mean_ul += b_ul;
        out.mean_dl += b_dl;
        for (int i = 0; i < d.ul_assoc.rows(); ++i) {
            const double a_i = d.ul_assoc.row(i).sum();
            if (a_i > 0)
                penalty += a_i * (d.hmd_power(i) + users[i].hmd_circuit_power) /
                           users[i].hmd_max_power;
        }
    }
    const double t = static_cast<double>(window.size());
    out.mean_ul /= t;
    out.mean_dl /= t;
    out.fop = out.mean_ul + out.mean_dl;
    out.objective = out.fop - penalty / t;
    return out;
}

}  // namespace fopsim
