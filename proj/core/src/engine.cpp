#include "ulpsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ulpsim/errors.hpp"
#include "ulpsim/linalg.hpp"

namespace ulpsim {

namespace {

constexpr double kVoltageClamp = 5.0;

struct MosRef {
    const MosModel* model;
    TempParams tp;
    int d, g, s;
    double c_gate; // linear gate capacitance to ground
};

struct CapRef {
    int n1, n2;
    double c;
};

struct ResRef {
    int n1, n2;
    double g;
};

struct SrcRef {
    int npos, nneg;
    const DriveSpec* drive;
    int branch; // 0-based branch index
};

// Companion state for one capacitor (explicit caps first, then gate caps).
struct CapState {
    double v = 0; // across voltage at the last accepted step
    double i = 0; // branch current at the last accepted step
};

/// Flattened circuit plus scratch space for Newton solves.
class MnaSystem {
public:
    MnaSystem(const Circuit& c, double t_kelvin) : circ_(c) {
        const int n_nodes = c.num_nodes();
        for (const auto& dev : c.devices) {
            if (const auto* m = std::get_if<Mosfet>(&dev.kind)) {
                const MosModel& model = c.models.at(m->model);
                MosRef r;
                r.model = &model;
                r.tp = temperature_adjust(model, m->width, m->length, t_kelvin);
                r.d = m->drain;
                r.g = m->gate;
                r.s = m->source;
                r.c_gate = mos_gate_charge(model, m->width, m->length, 0.0).capacitance;
                mos_.push_back(r);
            } else if (const auto* r = std::get_if<Resistor>(&dev.kind)) {
                res_.push_back({r->n1, r->n2, 1.0 / r->ohms});
            } else if (const auto* cap = std::get_if<Capacitor>(&dev.kind)) {
                caps_.push_back({cap->n1, cap->n2, cap->farads});
            } else if (const auto* v = std::get_if<VSource>(&dev.kind)) {
                SrcRef s{v->npos, v->nneg, &v->drive, static_cast<int>(srcs_.size())};
                srcs_.push_back(s);
                src_names_.push_back(dev.name);
            }
        }
        // gate capacitances join the capacitor list (to ground)
        for (const auto& m : mos_) {
            caps_.push_back({m.g, 0, m.c_gate});
        }

        dim_ = (n_nodes - 1) + static_cast<int>(srcs_.size());
        row_names_.resize(dim_);
        for (int i = 1; i < n_nodes; ++i) row_names_[i - 1] = "node " + c.node_names[i];
        for (size_t j = 0; j < srcs_.size(); ++j) {
            row_names_[n_nodes - 1 + j] = "branch i(" + src_names_[j] + ")";
        }
        jac_ = Matrix(dim_);
        f_.resize(dim_);
        x_.assign(dim_, 0.0);
        cap_state_.resize(caps_.size());
    }

    int dim() const { return dim_; }
    int n_nodes() const { return circ_.num_nodes(); }
    const std::vector<std::string>& source_names() const { return src_names_; }
    std::vector<double>& state() { return x_; }

    double node_voltage(int node) const { return node ? x_[node - 1] : 0.0; }
    double branch_current(int branch) const { return x_[n_nodes() - 1 + branch]; }
    size_t source_count() const { return srcs_.size(); }

    /// Residual f(x) and Jacobian at the current state. In transient mode the
    /// capacitor companions (conductance + history) are folded in; in DC mode
    /// capacitors are open. Source scale supports the source-stepping homotopy.
    void assemble(double time, bool transient_mode, double h, Integrator integ,
                  double gmin, double source_scale) {
        std::fill(f_.begin(), f_.end(), 0.0);
        jac_.zero();
        const int nb = n_nodes() - 1; // first branch row

        auto vn = [&](int node) { return node ? x_[node - 1] : 0.0; };
        auto add_f = [&](int node, double val) {
            if (node) f_[node - 1] += val;
        };
        auto add_j = [&](int row, int col_node, double val) {
            if (row && col_node) jac_.at(row - 1, col_node - 1) += val;
        };

        for (const auto& r : res_) {
            const double i = (vn(r.n1) - vn(r.n2)) * r.g;
            add_f(r.n1, i);
            add_f(r.n2, -i);
            add_j(r.n1, r.n1, r.g);
            add_j(r.n1, r.n2, -r.g);
            add_j(r.n2, r.n1, -r.g);
            add_j(r.n2, r.n2, r.g);
        }

        for (const auto& m : mos_) {
            const MosEval e = mos_ids_at(*m.model, m.tp, vn(m.g), vn(m.d), vn(m.s));
            add_f(m.d, e.i_ds);
            add_f(m.s, -e.i_ds);
            add_j(m.d, m.g, e.g_m);
            add_j(m.d, m.d, e.g_ds);
            add_j(m.d, m.s, e.g_ms);
            add_j(m.s, m.g, -e.g_m);
            add_j(m.s, m.d, -e.g_ds);
            add_j(m.s, m.s, -e.g_ms);
        }

        if (transient_mode) {
            for (size_t k = 0; k < caps_.size(); ++k) {
                const auto& cp = caps_[k];
                const auto& st = cap_state_[k];
                const double geq =
                    (integ == Integrator::trapezoidal ? 2.0 : 1.0) * cp.c / h;
                const double hist = (integ == Integrator::trapezoidal)
                                        ? geq * st.v + st.i
                                        : geq * st.v;
                const double dv = vn(cp.n1) - vn(cp.n2);
                const double i = geq * dv - hist;
                add_f(cp.n1, i);
                add_f(cp.n2, -i);
                add_j(cp.n1, cp.n1, geq);
                add_j(cp.n1, cp.n2, -geq);
                add_j(cp.n2, cp.n1, -geq);
                add_j(cp.n2, cp.n2, geq);
            }
        }

        for (const auto& s : srcs_) {
            const int row = nb + s.branch;
            const double ib = x_[row];
            // KCL: source delivers ib into npos
            add_f(s.npos, -ib);
            add_f(s.nneg, ib);
            if (s.npos) jac_.at(s.npos - 1, row) = -1.0;
            if (s.nneg) jac_.at(s.nneg - 1, row) = 1.0;
            // branch equation v+ - v- = E(t)
            const double e = source_scale * source_value(*s.drive, time);
            f_[row] = vn(s.npos) - vn(s.nneg) - e;
            if (s.npos) jac_.at(row, s.npos - 1) = 1.0;
            if (s.nneg) jac_.at(row, s.nneg - 1) = -1.0;
        }

        if (gmin > 0) {
            for (int i = 0; i < nb; ++i) {
                f_[i] += gmin * x_[i];
                jac_.at(i, i) += gmin;
            }
        }
    }

    double residual_norm() const {
        double w = 0;
        for (double v : f_) w = std::max(w, std::abs(v));
        return w;
    }

    std::string worst_row() const {
        int idx = 0;
        double w = -1;
        for (int i = 0; i < dim_; ++i) {
            if (std::abs(f_[i]) > w) {
                w = std::abs(f_[i]);
                idx = i;
            }
        }
        return row_names_[idx];
    }

    struct NewtonStats {
        bool converged = false;
        int iterations = 0;
        double residual = 0;
    };

    /// Damped Newton with residual backtracking on the assembled system.
    NewtonStats newton(double time, bool transient_mode, double h, Integrator integ,
                       double gmin, double source_scale, const SolveOptions& opts) {
        NewtonStats stats;
        assemble(time, transient_mode, h, integ, gmin, source_scale);
        double res = residual_norm();
        const int nv = n_nodes() - 1;

        for (int it = 0; it < opts.max_newton; ++it) {
            std::vector<double> delta;
            try {
                delta = solve_linear(jac_, f_, &row_names_);
            } catch (const SingularMatrixError&) {
                if (gmin > 0) throw;
                // retry this iterate with the floor shunt in place
                assemble(time, transient_mode, h, integ, opts.gmin_final, source_scale);
                delta = solve_linear(jac_, f_, &row_names_);
            }
            stats.iterations = it + 1;

            double max_dv = 0;
            for (int i = 0; i < nv; ++i) max_dv = std::max(max_dv, std::abs(delta[i]));
            double scale = 1.0;
            if (max_dv > opts.damping) scale = opts.damping / max_dv;

            const std::vector<double> x_prev = x_;
            double res_new = 0;
            int backtracks = 0;
            for (;;) {
                for (int i = 0; i < dim_; ++i) x_[i] = x_prev[i] - scale * delta[i];
                for (int i = 0; i < nv; ++i) x_[i] = std::clamp(x_[i], -kVoltageClamp, kVoltageClamp);
                assemble(time, transient_mode, h, integ, gmin, source_scale);
                res_new = residual_norm();
                if (res_new <= res || backtracks >= 4) break;
                ++backtracks;
                scale *= 0.5;
            }

            double vmax = 0;
            for (int i = 0; i < nv; ++i) vmax = std::max(vmax, std::abs(x_[i]));
            const double step_tol = opts.vntol + opts.reltol * vmax;
            res = res_new;
            if (max_dv * scale < step_tol && res < opts.abstol) {
                stats.converged = true;
                stats.residual = res;
                return stats;
            }
        }
        stats.residual = res;
        return stats;
    }

    /// Update companion states after an accepted step of size h.
    void accept_step(double h, Integrator integ) {
        for (size_t k = 0; k < caps_.size(); ++k) {
            const auto& cp = caps_[k];
            auto& st = cap_state_[k];
            const double v_new = node_voltage(cp.n1) - node_voltage(cp.n2);
            if (integ == Integrator::trapezoidal) {
                st.i = (2.0 * cp.c / h) * (v_new - st.v) - st.i;
            } else {
                st.i = (cp.c / h) * (v_new - st.v);
            }
            st.v = v_new;
        }
    }

    /// Initialize companion states from a DC solution (zero cap current).
    void init_cap_states() {
        for (size_t k = 0; k < caps_.size(); ++k) {
            cap_state_[k].v = node_voltage(caps_[k].n1) - node_voltage(caps_[k].n2);
            cap_state_[k].i = 0.0;
        }
    }

private:
    static double source_value(const DriveSpec& d, double t) {
        if (const auto* dc = std::get_if<DcSpec>(&d)) return dc->volts;
        return pulse_value(std::get<PulseSpec>(d), t);
    }

    const Circuit& circ_;
    std::vector<MosRef> mos_;
    std::vector<ResRef> res_;
    std::vector<CapRef> caps_;
    std::vector<SrcRef> srcs_;
    std::vector<std::string> src_names_;
    std::vector<CapState> cap_state_;
    std::vector<std::string> row_names_;
    Matrix jac_;
    std::vector<double> f_;
    std::vector<double> x_;
    int dim_ = 0;
};

/// DC Newton with gmin stepping then source stepping as fallbacks.
void solve_dc(MnaSystem& sys, const SolveOptions& opts, DcSolution* info) {
    auto attempt = [&](double gmin, double scale) {
        return sys.newton(0.0, /*transient=*/false, 0.0, Integrator::backward_euler,
                          gmin, scale, opts);
    };

    auto st = attempt(0.0, 1.0);
    if (st.converged) {
        if (info) info->newton_iterations = st.iterations;
        return;
    }

    // gmin stepping, decade schedule
    std::fill(sys.state().begin(), sys.state().end(), 0.0);
    bool ok = true;
    for (double g = opts.gmin_start; g >= opts.gmin_final * 0.999; g *= 0.1) {
        if (!attempt(g, 1.0).converged) {
            ok = false;
            break;
        }
    }
    if (ok) {
        st = attempt(0.0, 1.0);
        if (st.converged) {
            if (info) {
                info->used_gmin_stepping = true;
                info->newton_iterations = st.iterations;
            }
            return;
        }
    }

    // source stepping, 0 -> full in 10 steps
    std::fill(sys.state().begin(), sys.state().end(), 0.0);
    ok = true;
    for (int k = 1; k <= 10; ++k) {
        st = attempt(0.0, k / 10.0);
        if (!st.converged) {
            ok = false;
            break;
        }
    }
    if (ok) {
        if (info) {
            info->used_source_stepping = true;
            info->newton_iterations = st.iterations;
        }
        return;
    }

    std::ostringstream msg;
    msg << "DC operating point did not converge (all homotopies exhausted); "
        << "last residual " << st.residual << " A at " << sys.worst_row();
    throw ConvergenceError(msg.str());
}

} // namespace

const std::vector<double>& Waveform::node(const std::string& name) const {
    for (size_t i = 0; i < node_names.size(); ++i) {
        if (node_names[i] == name) return node_v[i];
    }
    throw DomainError("waveform has no node '" + name + "'");
}

const std::vector<double>& Waveform::source_current(const std::string& name) const {
    for (size_t i = 0; i < source_names.size(); ++i) {
        if (source_names[i] == name) return source_i[i];
    }
    throw DomainError("waveform has no source '" + name + "'");
}

std::string Waveform::to_csv() const {
    std::string out = "time";
    for (const auto& n : node_names) out += "," + n;
    for (const auto& s : source_names) out += ",i(" + s + ")";
    out += "\n";
    char buf[32];
    for (size_t k = 0; k < times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.8e", times[k]);
        out += buf;
        for (const auto& col : node_v) {
            std::snprintf(buf, sizeof buf, ",%.8e", col[k]);
            out += buf;
        }
        for (const auto& col : source_i) {
            std::snprintf(buf, sizeof buf, ",%.8e", col[k]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

DcSolution dc_operating_point(const Circuit& c, double t_kelvin, const SolveOptions& opts) {
    MnaSystem sys(c, t_kelvin);
    DcSolution sol;
    solve_dc(sys, opts, &sol);
    sol.node_voltages.resize(c.num_nodes());
    sol.node_voltages[0] = 0.0;
    for (int i = 1; i < c.num_nodes(); ++i) sol.node_voltages[i] = sys.node_voltage(i);
    sol.source_names = sys.source_names();
    sol.source_currents.resize(sys.source_count());
    for (size_t j = 0; j < sys.source_count(); ++j) {
        sol.source_currents[j] = sys.branch_current(static_cast<int>(j));
    }
    return sol;
}

Waveform transient(const Circuit& c, double t_step, double t_stop, double t_kelvin,
                   const SolveOptions& opts, Integrator integrator) {
    if (!(t_step > 0) || !(t_stop > t_step)) {
        throw DomainError("transient needs 0 < t_step < t_stop");
    }
    MnaSystem sys(c, t_kelvin);
    solve_dc(sys, opts, nullptr);
    sys.init_cap_states();

    Waveform w;
    w.source_names = sys.source_names();
    for (int i = 1; i < c.num_nodes(); ++i) w.node_names.push_back(c.node_names[i]);
    w.node_v.resize(w.node_names.size());
    w.source_i.resize(w.source_names.size());

    auto record = [&](double t) {
        w.times.push_back(t);
        for (size_t i = 0; i < w.node_v.size(); ++i) {
            w.node_v[i].push_back(sys.node_voltage(static_cast<int>(i) + 1));
        }
        for (size_t j = 0; j < w.source_i.size(); ++j) {
            w.source_i[j].push_back(sys.branch_current(static_cast<int>(j)));
        }
    };
    record(0.0);

    auto step_to = [&](double t_prev, double t_next, Integrator integ) -> bool {
        const double h = t_next - t_prev;
        const std::vector<double> saved = sys.state();
        auto st = sys.newton(t_next, /*transient=*/true, h, integ, 0.0, 1.0, opts);
        if (!st.converged) {
            sys.state() = saved;
            return false;
        }
        sys.accept_step(h, integ);
        record(t_next);
        return true;
    };

    const long n_steps = static_cast<long>(std::ceil(t_stop / t_step - 1e-9));
    int accepted = 0;
    double t_prev = 0.0;
    for (long k = 1; k <= n_steps; ++k) {
        const double t_next = std::min(static_cast<double>(k) * t_step, t_stop);
        const Integrator integ =
            (integrator == Integrator::backward_euler || accepted < 2)
                ? Integrator::backward_euler
                : Integrator::trapezoidal;
        if (step_to(t_prev, t_next, integ)) {
            ++accepted;
            t_prev = t_next;
            continue;
        }
        // one retry at half step
        const double t_mid = 0.5 * (t_prev + t_next);
        if (!step_to(t_prev, t_mid, integ)) {
            std::ostringstream msg;
            msg << "transient step failed to converge at t = " << t_mid << " s";
            throw ConvergenceError(msg.str());
        }
        ++accepted;
        if (!step_to(t_mid, t_next, integ)) {
            std::ostringstream msg;
            msg << "transient step failed to converge at t = " << t_next << " s";
            throw ConvergenceError(msg.str());
        }
        ++accepted;
        t_prev = t_next;
    }
    return w;
}

Waveform run_transient(const Circuit& c, const SolveOptions& opts, Integrator integrator) {
    const TranSpec* t = c.tran();
    if (!t) throw DomainError("deck has no .tran directive");
    return transient(c, t->t_step, t->t_stop, celsius_to_kelvin(c.global_temp_c), opts,
                     integrator);
}

} // namespace ulpsim
