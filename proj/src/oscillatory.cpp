#include "bsc/oscillatory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsc {

namespace {

constexpr cplx I(0.0, 1.0);
constexpr int kMaxE = 152; // highest monomial order carried by the scalar tables

// e_m(theta,h) = int_0^h s^m e^{i theta s} ds, m = 0..M.
//
// Three regimes keep every order stable:
//  - |theta h| < 2        : plain power series,
//  - m <= |theta h|       : upward recurrence,
//  - m >  |theta h|       : integration-by-parts tail series (no cancellation).
void e_all(double theta, double h, int M, cplx* out) {
    const double th = theta * h;
    const double ath = std::abs(th);
    if (ath < 2.0) {
        cplx term(1.0, 0.0); // (i theta h)^p / p!
        std::fill(out, out + M + 1, cplx(0.0, 0.0));
        for (int p = 0; p <= 40; ++p) {
            if (p > 0) term *= I * th / static_cast<double>(p);
            double mag = std::abs(term);
            for (int m = 0; m <= M; ++m) out[m] += term / static_cast<double>(m + p + 1);
            if (mag < 1e-20) break;
        }
        double hp = h;
        for (int m = 0; m <= M; ++m) {
            out[m] *= hp;
            hp *= h;
        }
        return;
    }
    const cplx eith = std::exp(I * th);
    const cplx itheta = I * theta;
    const int m_up = std::min(M, static_cast<int>(ath));
    out[0] = (eith - 1.0) / itheta;
    double hm = 1.0;
    for (int m = 1; m <= m_up; ++m) {
        hm *= h;
        out[m] = (hm * eith - static_cast<double>(m) * out[m - 1]) / itheta;
    }
    double hm1 = std::pow(h, m_up + 2); // h^{m+1} for m = m_up+1
    for (int m = m_up + 1; m <= M; ++m) {
        cplx acc(0.0, 0.0);
        cplx c = cplx(1.0, 0.0) / static_cast<double>(m + 1);
        for (int p = 0; p < 2000; ++p) {
            acc += c;
            c *= -I * th / static_cast<double>(m + 2 + p);
            if (std::abs(c) < 1e-20 * std::max(1.0, std::abs(acc))) break;
        }
        out[m] = hm1 * eith * acc;
        hm1 *= h;
    }
}

// Coefficients of b_n: int r^n e^{i w r} dr = e^{i w r} b_n(r) + C,
// b_n(r) = r^n/(iw) - (n/(iw)) b_{n-1}(r). Stable for n <= |w h| (scaled use).
void bpoly(double omega, int n, cplx* bc) {
    const cplx iw = I * omega;
    std::vector<cplx> prev(n + 1, cplx(0, 0)), cur(n + 1, cplx(0, 0));
    prev[0] = 1.0 / iw;
    if (n == 0) {
        bc[0] = prev[0];
        return;
    }
    for (int q = 1; q <= n; ++q) {
        std::fill(cur.begin(), cur.end(), cplx(0, 0));
        cur[q] = 1.0 / iw;
        for (int d = 0; d <= q - 1; ++d) cur[d] -= static_cast<double>(q) / iw * prev[d];
        std::swap(prev, cur);
    }
    for (int d = 0; d <= n; ++d) bc[d] = prev[d];
}

// J[p][n] = int_0^h s^p e^{i beta s} I_n(omega, s) ds with
// I_n(omega, s) = int_0^s r^n e^{i omega r} dr;  p <= P, n <= N.
struct JTable {
    int P = 0, N = 0;
    // row-major (P+1) x (N+1)
    std::vector<cplx> v;
    cplx& at(int p, int n) { return v[p * (N + 1) + n]; }
    cplx at(int p, int n) const { return v[p * (N + 1) + n]; }
};

JTable j_gen(double beta, double omega, double h, int P, int N) {
    JTable J;
    J.P = P;
    J.N = N;
    J.v.assign((P + 1) * (N + 1), cplx(0, 0));
    const double awh = std::abs(omega * h);
    cplx eb[kMaxE + 1];
    if (awh < 2.0) {
        // I_n series in omega
        e_all(beta, h, std::min(kMaxE, P + N + 1 + 45), eb);
        for (int n = 0; n <= N; ++n) {
            cplx c(1.0, 0.0); // (i omega)^q / q!
            double hq = 1.0;  // h^q, relative size of term q vs term 0
            for (int q = 0; q <= 44; ++q) {
                if (q > 0) {
                    c *= I * omega / static_cast<double>(q);
                    hq *= h;
                }
                cplx f = c / static_cast<double>(n + q + 1);
                int idx = n + q + 1;
                for (int p = 0; p <= P; ++p) J.at(p, n) += f * eb[p + idx];
                if (std::abs(c) * hq < 1e-18) break;
            }
        }
        return J;
    }
    cplx ebw[kMaxE + 1];
    e_all(beta, h, std::min(kMaxE, P + N + 1), eb);
    // the high-order tail of the shifted table is only touched by the IBP route,
    // which runs for inner powers above |omega h|
    int m_shifted = (static_cast<double>(N) > awh) ? kMaxE : std::min(kMaxE, P + N);
    e_all(beta + omega, h, m_shifted, ebw);
    for (int n = 0; n <= N; ++n) {
        if (n <= awh) {
            std::vector<cplx> bc(n + 1);
            bpoly(omega, n, bc.data());
            for (int p = 0; p <= P; ++p) {
                cplx acc(0, 0);
                for (int d = 0; d <= n; ++d) acc += bc[d] * ebw[p + d];
                acc -= bc[0] * eb[p];
                J.at(p, n) = acc;
            }
        } else {
            // IBP tail: I_n(omega,s) = e^{i omega s} sum_q a_q s^{n+1+q}
            cplx a = cplx(1.0, 0.0) / static_cast<double>(n + 1);
            const double a0 = std::abs(a);
            double hq = 1.0;
            for (int q = 0; q < 1200; ++q) {
                int idx = n + 1 + q;
                if (idx > kMaxE) break;
                for (int p = 0; p <= P; ++p)
                    if (p + idx <= kMaxE) J.at(p, n) += a * ebw[p + idx];
                cplx anext = a * (-I * omega) / static_cast<double>(n + 2 + q);
                hq *= h;
                if (std::abs(anext) * hq < 1e-18 * a0) break;
                a = anext;
            }
        }
    }
    return J;
}

struct SegPoly {
    double c[3] = {0, 0, 0}; // c0 + c1 s + c2 s^2
};

SegPoly segment_poly(const Control& b, int i) {
    SegPoly p;
    b.segment_coeffs(i, p.c[0], p.c[1], p.c[2]);
    return p;
}

bool same_grid(const Control& a, const Control& b) {
    if (a.samples.size() != b.samples.size()) return false;
    double tol = 1e-9 * std::max(a.dt, 1e-30);
    return std::abs(a.t0 - b.t0) < tol && std::abs(a.dt - b.dt) < tol;
}

bool overlaps(const Control& a, const Control& b) {
    double tol = 1e-12 * std::max(1.0, std::abs(a.t_end()));
    return a.t0 < b.t_end() - tol && b.t0 < a.t_end() - tol;
}

std::vector<const Control*> sorted_refs(std::span<const Control> blocks) {
    std::vector<const Control*> v;
    for (const auto& b : blocks)
        if (b.segments() > 0) v.push_back(&b);
    std::sort(v.begin(), v.end(),
              [](const Control* a, const Control* b) { return a->t0 < b->t0; });
    return v;
}

} // namespace

void phase_integrals(double theta, double h, int M, cplx* out) { e_all(theta, h, M, out); }

void nested_phase_integrals(double beta, double omega, double h, int P, int Minner,
                            cplx J[][5]) {
    JTable t = j_gen(beta, omega, h, P, Minner);
    for (int p = 0; p <= P; ++p)
        for (int m = 0; m <= Minner; ++m) J[p][m] = t.at(p, m);
}

void triple_phase_integrals(double beta, double gamma, double omega, double h,
                            cplx K[2][2][2]) {
    const double awh = std::abs(omega * h);
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            for (int m = 0; m < 2; ++m) K[p][q][m] = cplx(0, 0);
    if (awh < 2.0) {
        JTable t = j_gen(beta, gamma, h, 1, 1 + 1 + 45);
        for (int m = 0; m < 2; ++m) {
            cplx c(1.0, 0.0);
            double ha = 1.0;
            for (int a = 0; a <= 44; ++a) {
                if (a > 0) {
                    c *= I * omega / static_cast<double>(a);
                    ha *= h;
                }
                cplx f = c / static_cast<double>(m + a + 1);
                int n = m + a + 1;
                if (1 + n > t.N) break;
                for (int p = 0; p < 2; ++p)
                    for (int q = 0; q < 2; ++q) K[p][q][m] += f * t.at(p, q + n);
                if (std::abs(c) * ha < 1e-18) break;
            }
        }
        return;
    }
    JTable tgw = j_gen(beta, gamma + omega, h, 1, 2);
    JTable tg = j_gen(beta, gamma, h, 1, 1);
    for (int m = 0; m < 2; ++m) {
        cplx bc[2];
        bpoly(omega, m, bc);
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
                cplx acc(0, 0);
                for (int d = 0; d <= m; ++d) acc += bc[d] * tgw.at(p, q + d);
                acc -= bc[0] * tg.at(p, q);
                K[p][q][m] = acc;
            }
    }
}

cplx moment(const Control& block, double omega) {
    if (block.segments() <= 0) return {0.0, 0.0};
    cplx e[5];
    e_all(omega, block.dt, 4, e);
    cplx ph = std::exp(I * omega * block.t0);
    const cplx step = std::exp(I * omega * block.dt);
    cplx acc(0, 0);
    for (int i = 0; i < block.segments(); ++i) {
        SegPoly p = segment_poly(block, i);
        acc += ph * (p.c[0] * e[0] + p.c[1] * e[1] + p.c[2] * e[2]);
        ph *= step;
    }
    return acc;
}

cplx moment(std::span<const Control> blocks, double omega) {
    cplx acc(0, 0);
    for (const auto& b : blocks) acc += moment(b, omega);
    return acc;
}

Eigen::VectorXcd cumulative_moment(const Control& block, double omega) {
    Eigen::VectorXcd out(block.samples.size());
    out(0) = cplx(0, 0);
    cplx e[5];
    e_all(omega, block.dt, 4, e);
    cplx ph = std::exp(I * omega * block.t0);
    const cplx step = std::exp(I * omega * block.dt);
    for (int i = 0; i < block.segments(); ++i) {
        SegPoly p = segment_poly(block, i);
        out(i + 1) = out(i) + ph * (p.c[0] * e[0] + p.c[1] * e[1] + p.c[2] * e[2]);
        ph *= step;
    }
    return out;
}

cplx moment_of_square(const Control& block, double omega) {
    if (block.segments() <= 0) return {0.0, 0.0};
    cplx e[5];
    e_all(omega, block.dt, 4, e);
    cplx ph = std::exp(I * omega * block.t0);
    const cplx step = std::exp(I * omega * block.dt);
    cplx acc(0, 0);
    for (int i = 0; i < block.segments(); ++i) {
        SegPoly p = segment_poly(block, i);
        double q0 = p.c[0] * p.c[0];
        double q1 = 2.0 * p.c[0] * p.c[1];
        double q2 = p.c[1] * p.c[1] + 2.0 * p.c[0] * p.c[2];
        double q3 = 2.0 * p.c[1] * p.c[2];
        double q4 = p.c[2] * p.c[2];
        acc += ph * (q0 * e[0] + q1 * e[1] + q2 * e[2] + q3 * e[3] + q4 * e[4]);
        ph *= step;
    }
    return acc;
}

namespace {

// in-block moment restricted to its own support, complete
cplx block_moment(const Control& b, double omega) { return moment(b, omega); }

} // namespace

cplx chain2(std::span<const Control> out, double beta, std::span<const Control> in,
            double omega) {
    auto outs = sorted_refs(out);
    auto ins = sorted_refs(in);
    cplx total(0, 0);
    std::vector<cplx> in_complete(ins.size());
    for (size_t i = 0; i < ins.size(); ++i) in_complete[i] = block_moment(*ins[i], omega);

    for (const Control* O : outs) {
        cplx before(0, 0);
        const Control* match = nullptr;
        for (size_t i = 0; i < ins.size(); ++i) {
            if (ins[i]->t_end() <= O->t0 + 1e-12 * std::max(1.0, O->t_end())) {
                before += in_complete[i];
            } else if (overlaps(*ins[i], *O)) {
                if (!same_grid(*ins[i], *O))
                    throw std::invalid_argument(
                        "chain2: overlapping blocks must share their grid");
                match = ins[i];
            }
        }
        if (!match) {
            total += moment(*O, beta) * before;
            continue;
        }
        const double h = O->dt;
        cplx eb[4];
        e_all(beta, h, 3, eb);
        cplx J[3][5];
        nested_phase_integrals(beta, omega, h, 2, 2, J);
        cplx phb = std::exp(I * beta * O->t0);
        const cplx stepb = std::exp(I * beta * h);
        cplx phw = std::exp(I * omega * O->t0);
        const cplx stepw = std::exp(I * omega * h);
        cplx ein[5];
        e_all(omega, h, 4, ein);
        cplx ipart(0, 0);
        for (int s = 0; s < O->segments(); ++s) {
            SegPoly po = segment_poly(*O, s);
            SegPoly pi = segment_poly(*match, s);
            cplx od = po.c[0] * eb[0] + po.c[1] * eb[1] + po.c[2] * eb[2];
            cplx cross(0, 0);
            for (int p = 0; p < 3; ++p) {
                if (po.c[p] == 0.0) continue;
                for (int m = 0; m < 3; ++m)
                    if (pi.c[m] != 0.0) cross += po.c[p] * pi.c[m] * J[p][m];
            }
            total += phb * (od * (before + ipart) + phw * cross);
            ipart += phw * (pi.c[0] * ein[0] + pi.c[1] * ein[1] + pi.c[2] * ein[2]);
            phb *= stepb;
            phw *= stepw;
        }
    }
    return total;
}

void chain2_all(std::span<const Control> out, std::span<const double> betas, double beta_shift,
                std::span<const Control> in, double omega, std::span<cplx> acc,
                std::span<const cplx> weights) {
    const int K = static_cast<int>(betas.size());
    auto outs = sorted_refs(out);
    auto ins = sorted_refs(in);
    std::vector<cplx> in_complete(ins.size());
    for (size_t i = 0; i < ins.size(); ++i) in_complete[i] = block_moment(*ins[i], omega);

    std::vector<cplx> ebk(3 * K), jk(4 * K), phb(K), stepb(K);
    for (const Control* O : outs) {
        cplx before(0, 0);
        const Control* match = nullptr;
        for (size_t i = 0; i < ins.size(); ++i) {
            if (ins[i]->t_end() <= O->t0 + 1e-12 * std::max(1.0, O->t_end()))
                before += in_complete[i];
            else if (overlaps(*ins[i], *O)) {
                if (!same_grid(*ins[i], *O))
                    throw std::invalid_argument(
                        "chain2_all: overlapping blocks must share their grid");
                match = ins[i];
            }
        }
        const double h = O->dt;
        for (int k = 0; k < K; ++k) {
            double b = betas[k] + beta_shift;
            cplx e[4];
            e_all(b, h, 2, e);
            ebk[3 * k] = e[0];
            ebk[3 * k + 1] = e[1];
            ebk[3 * k + 2] = e[2];
            phb[k] = std::exp(I * b * O->t0);
            stepb[k] = std::exp(I * b * h);
            if (match) {
                cplx J[3][5];
                nested_phase_integrals(b, omega, h, 1, 1, J);
                jk[4 * k] = J[0][0];
                jk[4 * k + 1] = J[0][1];
                jk[4 * k + 2] = J[1][0];
                jk[4 * k + 3] = J[1][1];
            }
        }
        if (!match) {
            // outer moment times accumulated inner integral
            for (int s = 0; s < O->segments(); ++s) {
                SegPoly po = segment_poly(*O, s);
                for (int k = 0; k < K; ++k) {
                    cplx od = po.c[0] * ebk[3 * k] + po.c[1] * ebk[3 * k + 1] +
                              po.c[2] * ebk[3 * k + 2];
                    acc[k] += weights[k] * phb[k] * od * before;
                    phb[k] *= stepb[k];
                }
            }
            continue;
        }
        cplx ein[5];
        e_all(omega, h, 4, ein);
        cplx phw = std::exp(I * omega * O->t0);
        const cplx stepw = std::exp(I * omega * h);
        cplx ipart(0, 0);
        for (int s = 0; s < O->segments(); ++s) {
            SegPoly po = segment_poly(*O, s);
            SegPoly pi = segment_poly(*match, s);
            cplx itot = before + ipart;
            for (int k = 0; k < K; ++k) {
                cplx od = po.c[0] * ebk[3 * k] + po.c[1] * ebk[3 * k + 1] +
                          po.c[2] * ebk[3 * k + 2];
                cplx cross = po.c[0] * (pi.c[0] * jk[4 * k] + pi.c[1] * jk[4 * k + 1]) +
                             po.c[1] * (pi.c[0] * jk[4 * k + 2] + pi.c[1] * jk[4 * k + 3]);
                acc[k] += weights[k] * phb[k] * (od * itot + phw * cross);
                phb[k] *= stepb[k];
            }
            ipart += phw * (pi.c[0] * ein[0] + pi.c[1] * ein[1] + pi.c[2] * ein[2]);
            phw *= stepw;
        }
    }
}

void chain3_all(std::span<const Control> v, std::span<const double> betas, double beta_shift,
                double gamma, double omega, std::span<cplx> acc,
                std::span<const cplx> weights) {
    const int K = static_cast<int>(betas.size());
    auto blocks = sorted_refs(v);
    for (size_t i = 1; i < blocks.size(); ++i)
        if (overlaps(*blocks[i - 1], *blocks[i]))
            throw std::invalid_argument("chain3_all requires disjoint blocks");

    cplx i_run(0, 0), mid_run(0, 0);
    std::vector<cplx> phb(K), stepb(K), eb(2 * K), jg(4 * K), kt(8 * K);
    for (const Control* B : blocks) {
        const double h = B->dt;
        cplx eg[3], ew[3];
        e_all(gamma, h, 1, eg);
        e_all(omega, h, 1, ew);
        cplx Jgw[3][5];
        nested_phase_integrals(gamma, omega, h, 1, 1, Jgw);
        for (int k = 0; k < K; ++k) {
            double b = betas[k] + beta_shift;
            cplx e[2];
            e_all(b, h, 1, e);
            eb[2 * k] = e[0];
            eb[2 * k + 1] = e[1];
            cplx J[3][5];
            nested_phase_integrals(b, gamma, h, 1, 1, J);
            jg[4 * k] = J[0][0];
            jg[4 * k + 1] = J[0][1];
            jg[4 * k + 2] = J[1][0];
            jg[4 * k + 3] = J[1][1];
            cplx Kt[2][2][2];
            triple_phase_integrals(b, gamma, omega, h, Kt);
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q)
                    for (int m = 0; m < 2; ++m)
                        kt[8 * k + 4 * p + 2 * q + m] = Kt[p][q][m];
            phb[k] = std::exp(I * b * B->t0);
            stepb[k] = std::exp(I * b * h);
        }
        cplx phg = std::exp(I * gamma * B->t0);
        const cplx stepg = std::exp(I * gamma * h);
        cplx phw = std::exp(I * omega * B->t0);
        const cplx stepw = std::exp(I * omega * h);
        for (int s = 0; s < B->segments(); ++s) {
            SegPoly p = segment_poly(*B, s);
            double a0 = p.c[0], a1 = p.c[1];
            for (int k = 0; k < K; ++k) {
                cplx od = a0 * eb[2 * k] + a1 * eb[2 * k + 1];
                cplx jdot = a0 * (a0 * jg[4 * k] + a1 * jg[4 * k + 1]) +
                            a1 * (a0 * jg[4 * k + 2] + a1 * jg[4 * k + 3]);
                const cplx* Kk = &kt[8 * k];
                cplx kdot = a0 * (a0 * (a0 * Kk[0] + a1 * Kk[1]) +
                                  a1 * (a0 * Kk[2] + a1 * Kk[3])) +
                            a1 * (a0 * (a0 * Kk[4] + a1 * Kk[5]) +
                                  a1 * (a0 * Kk[6] + a1 * Kk[7]));
                acc[k] += weights[k] * phb[k] *
                          (od * mid_run + phg * (i_run * jdot + phw * kdot));
                phb[k] *= stepb[k];
            }
            cplx egd = a0 * eg[0] + a1 * eg[1];
            cplx jgw = a0 * (a0 * Jgw[0][0] + a1 * Jgw[0][1]) +
                       a1 * (a0 * Jgw[1][0] + a1 * Jgw[1][1]);
            mid_run += phg * (i_run * egd + phw * jgw);
            i_run += phw * (a0 * ew[0] + a1 * ew[1]);
            phg *= stepg;
            phw *= stepw;
        }
    }
}

cplx chain3(std::span<const Control> v, double beta, double gamma, double omega) {
    double b[1] = {beta};
    cplx a[1] = {cplx(0, 0)};
    cplx w[1] = {cplx(1, 0)};
    chain3_all(v, std::span<const double>(b, 1), 0.0, gamma, omega, std::span<cplx>(a, 1),
               std::span<const cplx>(w, 1));
    return a[0];
}

Eigen::VectorXcd hat_moments(int n, double h, double omega) {
    Eigen::VectorXcd m = Eigen::VectorXcd::Zero(n + 1);
    cplx e[3];
    e_all(omega, h, 2, e);
    cplx rising = e[1] / h;        // int (s/h) e^{i omega s}
    cplx falling = e[0] - e[1] / h; // int (1 - s/h) e^{i omega s}
    for (int a = 0; a <= n; ++a) {
        cplx acc(0, 0);
        if (a >= 1) acc += std::exp(I * omega * ((a - 1) * h)) * rising;
        if (a <= n - 1) acc += std::exp(I * omega * (a * h)) * falling;
        m(a) = acc;
    }
    return m;
}

Eigen::MatrixXcd hat_product_matrix(int n, double h, double theta) {
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    cplx e[4];
    e_all(theta, h, 3, e);
    // segment-local products of the two hats living on one segment
    cplx rr = e[2] / (h * h);                      // (s/h)^2
    cplx ff = e[0] - 2.0 * e[1] / h + e[2] / (h * h); // (1-s/h)^2
    cplx rf = e[1] / h - e[2] / (h * h);           // (s/h)(1-s/h)
    for (int s = 0; s < n; ++s) {
        cplx ph = std::exp(I * theta * (s * h));
        // hats on segment s: falling = hat_s, rising = hat_{s+1}
        B(s, s) += ph * ff;
        B(s + 1, s + 1) += ph * rr;
        B(s, s + 1) += ph * rf;
        B(s + 1, s) += ph * rf;
    }
    return B;
}

Eigen::MatrixXcd hat_chain_matrix(int n, double h, double beta, double omega) {
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    Eigen::VectorXcd u = hat_moments(n, h, beta);
    Eigen::VectorXcd w = hat_moments(n, h, omega);
    for (int a = 2; a <= n; ++a) H.row(a).head(a - 1) = u(a) * w.head(a - 1).transpose();

    cplx J[3][5];
    nested_phase_integrals(beta, omega, h, 1, 1, J);
    cplx ew[3];
    e_all(omega, h, 1, ew);
    cplx eb[3];
    e_all(beta, h, 1, eb);
    // local basis on a segment: index 0 = falling (1 - s/h), 1 = rising (s/h)
    auto outdot = [&](int kind) { return kind == 0 ? eb[0] - eb[1] / h : eb[1] / h; };
    auto indot = [&](int kind) { return kind == 0 ? ew[0] - ew[1] / h : ew[1] / h; };
    auto crossdot = [&](int okind, int ikind) {
        auto term = [&](int p) { return ikind == 0 ? J[p][0] - J[p][1] / h : J[p][1] / h; };
        return okind == 0 ? term(0) - term(1) / h : term(1) / h;
    };
    // I_b value at the start of segment s (contributions of hat_b fully before s)
    auto i_at = [&](int b, int s) -> cplx {
        cplx acc(0, 0);
        if (b >= 1 && s >= b) acc += std::exp(I * omega * ((b - 1) * h)) * indot(1);
        if (b <= n - 1 && s >= b + 1) acc += std::exp(I * omega * (b * h)) * indot(0);
        return acc;
    };
    for (int a = 0; a <= n; ++a) {
        for (int b = std::max(0, a - 1); b <= std::min(n, a + 1); ++b) {
            cplx acc(0, 0);
            for (int pass = 0; pass < 2; ++pass) {
                int s = (pass == 0) ? a - 1 : a;     // segment index
                int okind = (pass == 0) ? 1 : 0;     // rising on s=a-1, falling on s=a
                if (s < 0 || s >= n) continue;
                cplx phb = std::exp(I * beta * (s * h));
                acc += phb * outdot(okind) * i_at(b, s);
                // does hat_b live on segment s?
                int ikind = -1;
                if (s == b - 1) ikind = 1;
                else if (s == b) ikind = 0;
                if (ikind >= 0) {
                    cplx phw = std::exp(I * omega * (s * h));
                    acc += phb * phw * crossdot(okind, ikind);
                }
            }
            H(a, b) = acc;
        }
    }
    return H;
}

} // namespace bsc
