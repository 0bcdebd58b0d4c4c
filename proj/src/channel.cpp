// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#include "genest/channel.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>

#include "genest/parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset serialization assumes a little-endian host");

namespace genest {

void ClusterRayConfig::validate() const {
    if (n_clusters < 1 || n_rays < 1)
        throw InvalidConfigError("channel config: need at least one cluster and one ray");
    if (n_tx_h < 1 || n_tx_v < 1 || n_rx_h < 1 || n_rx_v < 1)
        throw InvalidConfigError("channel config: URA dimensions must be >= 1");
    if (n_subcarriers < 1)
        throw InvalidConfigError("channel config: need at least one subcarrier");
    if (n_taps < 1 || n_taps > n_subcarriers)
        throw InvalidConfigError("channel config: taps must satisfy 1 <= L <= n_subcarriers");
    if (angle_spread_deg < 0.0 || delay_profile_decay < 0.0)
        throw InvalidConfigError("channel config: spreads and decay must be >= 0");
    if (antenna_spacing_wavelengths <= 0.0)
        throw InvalidConfigError("channel config: antenna spacing must be > 0");
    if (gain_truncation_sigmas <= 0.0)
        throw InvalidConfigError("channel config: gain truncation must be > 0");
}

CVec ChannelRealization::stacked() const {
    const Eigen::Index block = static_cast<Eigen::Index>(n_r()) * n_t();
    CVec h(block * n_f());
    for (int k = 0; k < n_f(); ++k)
        h.segment(k * block, block) = vec(per_subcarrier[static_cast<std::size_t>(k)]);
    return h;
}

double ChannelRealization::squared_norm() const {
    double s = 0.0;
    for (const CMat &hk : per_subcarrier)
        s += hk.squaredNorm();
    return s;
}

ChannelRealization channel_from_stacked(const CVec &h, int n_f, int n_r, int n_t) {
    const Eigen::Index block = static_cast<Eigen::Index>(n_r) * n_t;
    if (h.size() != block * n_f)
        throw ShapeError("channel_from_stacked: length does not match dimensions");
    ChannelRealization out;
    out.per_subcarrier.reserve(static_cast<std::size_t>(n_f));
    for (int k = 0; k < n_f; ++k)
        out.per_subcarrier.push_back(unvec(h.segment(k * block, block), n_r, n_t));
    return out;
}

bool datasets_equal(const ChannelDataset &a, const ChannelDataset &b) {
    if (!(a.config == b.config) || a.master_seed != b.master_seed ||
        a.realizations.size() != b.realizations.size())
        return false;
    for (std::size_t i = 0; i < a.realizations.size(); ++i) {
        const auto &ra = a.realizations[i].per_subcarrier;
        const auto &rb = b.realizations[i].per_subcarrier;
        if (ra.size() != rb.size())
            return false;
        for (std::size_t k = 0; k < ra.size(); ++k)
            if (ra[k].rows() != rb[k].rows() || ra[k].cols() != rb[k].cols() || ra[k] != rb[k])
                return false;
    }
    return true;
}

CVec array_response_ura(double azimuth, double elevation, int n_h, int n_v, double spacing) {
    if (n_h < 1 || n_v < 1)
        throw InvalidDimensionError("array_response_ura: grid must be >= 1 in each direction");
    CVec a(static_cast<Eigen::Index>(n_h) * n_v);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_h) * n_v);
    const double horiz = std::sin(azimuth) * std::sin(elevation);
    const double vert = std::cos(elevation);
    Eigen::Index idx = 0;
    for (int p = 0; p < n_h; ++p)
        for (int q = 0; q < n_v; ++q)
            a(idx++) = std::polar(scale, 2.0 * std::numbers::pi * spacing * (p * horiz + q * vert));
    return a;
}

namespace {

std::complex<double> truncated_cnormal(Rng &rng, double max_sigmas) {
    // redraw beyond the truncation radius; vanishingly rare at 6 sigma
    for (;;) {
        std::complex<double> g = rng.cnormal();
        if (std::abs(g) <= max_sigmas)
            return g;
    }
}

} // namespace

std::vector<CMat> sample_geometric_taps(const ClusterRayConfig &cfg, Rng &rng) {
    cfg.validate();
    const int nr = cfg.n_rx();
    const int nt = cfg.n_tx();
    const double spread = cfg.angle_spread_deg * std::numbers::pi / 180.0;

    // tap weights and the analytic normalization gamma; with unit-variance
    // ray gains, E||H_k||_F^2 = (nr*nt/gamma) * sum_rays w_tap(ray)
    std::vector<double> tap_weight(static_cast<std::size_t>(cfg.n_taps));
    for (int l = 0; l < cfg.n_taps; ++l)
        tap_weight[static_cast<std::size_t>(l)] = std::exp(-cfg.delay_profile_decay * l);
    double gamma = 0.0;
    for (int i = 0; i < cfg.n_clusters; ++i) {
        const int tap = static_cast<int>((static_cast<long>(i) * cfg.n_taps) / cfg.n_clusters);
        gamma += cfg.n_rays * tap_weight[static_cast<std::size_t>(tap)];
    }
    const double amplitude = std::sqrt(static_cast<double>(nr) * nt / gamma);

    std::vector<CMat> taps(static_cast<std::size_t>(cfg.n_taps), CMat::Zero(nr, nt));
    for (int i = 0; i < cfg.n_clusters; ++i) {
        const int tap = static_cast<int>((static_cast<long>(i) * cfg.n_taps) / cfg.n_clusters);
        const double az_r = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const double el_r = rng.uniform(0.0, std::numbers::pi);
        const double az_t = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const double el_t = rng.uniform(0.0, std::numbers::pi);
        for (int l = 0; l < cfg.n_rays; ++l) {
            const CVec a_r = array_response_ura(az_r + spread * rng.normal(),
                                                el_r + spread * rng.normal(), cfg.n_rx_h,
                                                cfg.n_rx_v, cfg.antenna_spacing_wavelengths);
            const CVec a_t = array_response_ura(az_t + spread * rng.normal(),
                                                el_t + spread * rng.normal(), cfg.n_tx_h,
                                                cfg.n_tx_v, cfg.antenna_spacing_wavelengths);
            const cplx gain = amplitude *
                              std::sqrt(tap_weight[static_cast<std::size_t>(tap)]) *
                              truncated_cnormal(rng, cfg.gain_truncation_sigmas);
            taps[static_cast<std::size_t>(tap)].noalias() += gain * a_r * a_t.adjoint();
        }
    }
    return taps;
}

std::vector<CMat> taps_to_subcarriers(const std::vector<CMat> &taps, int n_f) {
    if (taps.empty())
        throw InvalidDimensionError("taps_to_subcarriers: need at least one tap");
    if (static_cast<int>(taps.size()) > n_f)
        throw ShapeError("taps_to_subcarriers: more taps than subcarriers");
    std::vector<CMat> out;
    out.reserve(static_cast<std::size_t>(n_f));
    for (int k = 0; k < n_f; ++k) {
        CMat hk = CMat::Zero(taps[0].rows(), taps[0].cols());
        for (int l = 0; l < static_cast<int>(taps.size()); ++l) {
            const long phase_idx = (static_cast<long>(k) * l) % n_f;
            const double angle =
                -2.0 * std::numbers::pi * static_cast<double>(phase_idx) / static_cast<double>(n_f);
            hk += std::polar(1.0, angle) * taps[static_cast<std::size_t>(l)];
        }
        out.push_back(std::move(hk));
    }
    return out;
}

ChannelRealization sample_channel(const ClusterRayConfig &cfg, Rng &rng) {
    ChannelRealization ch;
    ch.taps = sample_geometric_taps(cfg, rng);
    ch.per_subcarrier = taps_to_subcarriers(ch.taps, cfg.n_subcarriers);
    return ch;
}

ChannelDataset generate_dataset(const ClusterRayConfig &cfg, int count, std::uint64_t master_seed) {
    cfg.validate();
    if (count < 1)
        throw InvalidConfigError("generate_dataset: count must be >= 1");
    ChannelDataset ds;
    ds.config = cfg;
    ds.master_seed = master_seed;
    ds.realizations.resize(static_cast<std::size_t>(count));
    parallel_for(count, [&](int i) {
        Rng rng(derive_seed(master_seed, {static_cast<std::uint64_t>(i)}));
        ds.realizations[static_cast<std::size_t>(i)] = sample_channel(cfg, rng);
    });
    return ds;
}

namespace {

constexpr char kMagic[4] = {'G', 'C', 'H', 'D'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::ostream &os, std::uint16_t v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}
void put_u32(std::ostream &os, std::uint32_t v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}
void put_u64(std::ostream &os, std::uint64_t v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}
void put_f64(std::ostream &os, double v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <typename T> T get(std::istream &is) {
    T v{};
    if (!is.read(reinterpret_cast<char *>(&v), sizeof v))
        throw FormatError("dataset file: truncated");
    return v;
}

} // namespace

void save_dataset(const ChannelDataset &ds, const std::string &path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw FormatError("save_dataset: cannot open " + path);
    os.write(kMagic, 4);
    put_u16(os, kVersion);
    const ClusterRayConfig &c = ds.config;
    put_u32(os, static_cast<std::uint32_t>(c.n_tx()));
    put_u32(os, static_cast<std::uint32_t>(c.n_rx()));
    put_u32(os, static_cast<std::uint32_t>(c.n_subcarriers));
    put_u32(os, static_cast<std::uint32_t>(c.n_taps));
    put_u32(os, static_cast<std::uint32_t>(ds.count()));
    put_u64(os, ds.master_seed);
    // remaining configuration as binary64 scalars
    put_f64(os, static_cast<double>(c.n_clusters));
    put_f64(os, static_cast<double>(c.n_rays));
    put_f64(os, static_cast<double>(c.n_tx_h));
    put_f64(os, static_cast<double>(c.n_tx_v));
    put_f64(os, static_cast<double>(c.n_rx_h));
    put_f64(os, static_cast<double>(c.n_rx_v));
    put_f64(os, c.angle_spread_deg);
    put_f64(os, c.delay_profile_decay);
    put_f64(os, c.antenna_spacing_wavelengths);
    put_f64(os, c.gain_truncation_sigmas);

    for (const ChannelRealization &ch : ds.realizations) {
        if (ch.n_f() != c.n_subcarriers || ch.n_r() != c.n_rx() || ch.n_t() != c.n_tx())
            throw ShapeError("save_dataset: realization dims disagree with config");
        for (const CMat &hk : ch.per_subcarrier)
            for (Eigen::Index i = 0; i < hk.rows(); ++i)
                for (Eigen::Index j = 0; j < hk.cols(); ++j) {
                    put_f64(os, hk(i, j).real());
                    put_f64(os, hk(i, j).imag());
                }
    }
    if (!os)
        throw FormatError("save_dataset: write failed for " + path);
}

ChannelDataset load_dataset(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw FormatError("load_dataset: cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("load_dataset: bad magic");
    if (get<std::uint16_t>(is) != kVersion)
        throw FormatError("load_dataset: unsupported version");

    const auto n_tx = get<std::uint32_t>(is);
    const auto n_rx = get<std::uint32_t>(is);
    const auto n_f = get<std::uint32_t>(is);
    const auto n_taps = get<std::uint32_t>(is);
    const auto count = get<std::uint32_t>(is);
    const auto seed = get<std::uint64_t>(is);

    ChannelDataset ds;
    ds.master_seed = seed;
    ClusterRayConfig &c = ds.config;
    c.n_clusters = static_cast<int>(get<double>(is));
    c.n_rays = static_cast<int>(get<double>(is));
    c.n_tx_h = static_cast<int>(get<double>(is));
    c.n_tx_v = static_cast<int>(get<double>(is));
    c.n_rx_h = static_cast<int>(get<double>(is));
    c.n_rx_v = static_cast<int>(get<double>(is));
    c.angle_spread_deg = get<double>(is);
    c.delay_profile_decay = get<double>(is);
    c.antenna_spacing_wavelengths = get<double>(is);
    c.gain_truncation_sigmas = get<double>(is);
    c.n_subcarriers = static_cast<int>(n_f);
    c.n_taps = static_cast<int>(n_taps);
    if (static_cast<std::uint32_t>(c.n_tx()) != n_tx || static_cast<std::uint32_t>(c.n_rx()) != n_rx)
        throw FormatError("load_dataset: header dims disagree with URA factorization");
    c.validate();

    ds.realizations.resize(count);
    for (std::uint32_t n = 0; n < count; ++n) {
        ChannelRealization &ch = ds.realizations[n];
        ch.per_subcarrier.resize(n_f);
        for (std::uint32_t k = 0; k < n_f; ++k) {
            CMat hk(n_rx, n_tx);
            for (std::uint32_t i = 0; i < n_rx; ++i)
                for (std::uint32_t j = 0; j < n_tx; ++j) {
                    double re = get<double>(is);
                    double im = get<double>(is);
                    hk(i, j) = cplx(re, im);
                }
            ch.per_subcarrier[k] = std::move(hk);
        }
    }
    // must now be exactly at end of file
    is.peek();
    if (!is.eof())
        throw FormatError("load_dataset: trailing bytes after payload");
    return ds;
}

} // namespace genest
