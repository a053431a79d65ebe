#include "edgewbc/walk_plan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgewbc {

namespace {

// Smoothstep cubic p(u) = 3u^2 - 2u^3 with derivatives, u in [0, 1].
struct Cubic {
  double p, dp, ddp;
};

Cubic smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return {u * u * (3.0 - 2.0 * u), 6.0 * u * (1.0 - u), 6.0 - 12.0 * u};
}

// Exact constant-ZMP pendulum propagation over an interval of length t.
void lip_propagate(double omega, double zmp, double x0, double v0, double t,
                   double& x, double& v) {
  const double c = std::cosh(omega * t);
  const double s = std::sinh(omega * t);
  const double xi = x0 - zmp;
  x = zmp + xi * c + (v0 / omega) * s;
  v = xi * omega * s + v0 * c;
}

double snap_to_grid(double t, double grid) {
  const double n = std::max(1.0, std::round(t / grid));
  return n * grid;
}

void validate_params(const WalkParams& p) {
  if (p.com_height <= 0.0 || p.gravity <= 0.0)
    throw PlanError("walk plan: com_height and gravity must be positive");
  if (p.double_support <= 0.0 || p.step_duration <= p.double_support)
    throw PlanError("walk plan: need 0 < double_support < step_duration");
  if (p.step_length < 0.0) throw PlanError("walk plan: negative step length");
  if (p.steps < 1) throw PlanError("walk plan: need at least one step");
  if (p.ctrl_period <= 0.0) throw PlanError("walk plan: control period must be positive");
  if (p.swing_height <= 0.0) throw PlanError("walk plan: swing height must be positive");
  if (p.stance_width <= 0.0) throw PlanError("walk plan: stance width must be positive");
}

}  // namespace

TaskTarget SwingProfile::eval(double t) const {
  const double T = t1 - t0;
  const double u = std::clamp((t - t0) / T, 0.0, 1.0);
  const Cubic cx = smoothstep(u);

  TaskTarget out;
  out.pos = Vec2(x_from + (x_to - x_from) * cx.p, 0.0);
  out.vel = Vec2((x_to - x_from) * cx.dp / T, 0.0);
  out.acc = Vec2((x_to - x_from) * cx.ddp / (T * T), 0.0);

  // Height bump: rise over the first half, descend over the second, each a
  // smoothstep so lift-off and touchdown are velocity-free.
  const double Th = 0.5 * T;
  if (u < 0.5) {
    const Cubic cz = smoothstep(u * 2.0);
    out.pos.y() = height * cz.p;
    out.vel.y() = height * cz.dp / Th;
    out.acc.y() = height * cz.ddp / (Th * Th);
  } else {
    const Cubic cz = smoothstep((u - 0.5) * 2.0);
    out.pos.y() = height * (1.0 - cz.p);
    out.vel.y() = -height * cz.dp / Th;
    out.acc.y() = -height * cz.ddp / (Th * Th);
  }
  return out;
}

const PlanPhase& WalkPlan::phase_at(double t) const {
  if (phases.empty()) throw PlanError("empty plan");
  auto it = std::upper_bound(phases.begin(), phases.end(), t,
                             [](double tv, const PlanPhase& ph) { return tv < ph.t1; });
  if (it == phases.end()) return phases.back();
  return *it;
}

ContactSet WalkPlan::contact_mode(double t) const { return phase_at(t).contacts; }

TaskTarget WalkPlan::com_ref(double t) const {
  const PlanPhase& ph = phase_at(t);
  const double tau = std::clamp(t, ph.t0, ph.t1) - ph.t0;
  double x, v;
  lip_propagate(omega, ph.zmp, ph.x0, ph.v0, tau, x, v);
  TaskTarget out;
  out.pos = Vec2(x, com_height);
  out.vel = Vec2(v, 0.0);
  out.acc = Vec2(omega * omega * (x - ph.zmp), 0.0);
  return out;
}

const SwingProfile* WalkPlan::swing_at(double t) const {
  const PlanPhase& ph = phase_at(t);
  return ph.swing ? &*ph.swing : nullptr;
}

double WalkPlan::next_switch_after(double t) const {
  for (std::size_t i = 0; i + 1 < phases.size(); ++i) {
    if (phases[i].t1 > t && !(phases[i].contacts == phases[i + 1].contacts))
      return phases[i].t1;
  }
  return std::numeric_limits<double>::infinity();
}

ContactSet WalkPlan::mode_after(double t_switch) const {
  return phase_at(std::nextafter(t_switch, std::numeric_limits<double>::infinity()))
      .contacts;
}

double WalkPlan::planned_foot_x(int frame, double t) const {
  double x = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [f, fx] : initial_feet)
    if (f == frame) x = fx;
  if (!std::isfinite(x)) throw PlanError("foot frame not part of the plan");
  for (const PlanPhase& ph : phases) {
    if (ph.t0 > t) break;
    if (ph.swing && ph.swing->frame == frame)
      x = (t >= ph.t1) ? ph.swing->x_to : ph.swing->eval(t).pos.x();
  }
  return x;
}

WalkPlan generate_walk_plan(const WalkParams& p, const FootContacts& left,
                            const FootContacts& right) {
  validate_params(p);
  for (const FootContacts* foot : {&left, &right}) {
    if (foot->frame < 0) throw PlanError("walk plan: foot reference frame not set");
    if (foot->stance.empty()) throw PlanError("walk plan: foot has no stance contacts");
  }
  const int left_frame = left.frame;
  const int right_frame = right.frame;

  auto stance_set = [](std::initializer_list<const FootContacts*> feet) {
    ContactSet set;
    for (const FootContacts* foot : feet)
      set.frames.insert(set.frames.end(), foot->stance.begin(), foot->stance.end());
    std::sort(set.frames.begin(), set.frames.end());
    set.frames.erase(std::unique(set.frames.begin(), set.frames.end()), set.frames.end());
    return set;
  };

  WalkPlan plan;
  plan.com_height = p.com_height;
  plan.omega = std::sqrt(p.gravity / p.com_height);
  const double w = plan.omega;
  const double L = p.step_length;
  const double T = p.step_duration;
  const double cT = std::cosh(w * T);
  const double sT = std::sinh(w * T);
  const bool in_place = L < 1.0e-9;

  // Periodic-orbit entry state relative to the stance foot. A forward gait
  // enters every step at -L/2 moving forward; an in-place sway alternates
  // sign with the stance side.
  double v_orbit, xi_orbit, d0;
  if (in_place) {
    d0 = p.stance_width;
    xi_orbit = -0.5 * d0;
    v_orbit = 0.5 * d0 * w * std::tanh(0.5 * w * T);
  } else {
    v_orbit = 0.5 * L * w * (1.0 + cT) / sT;
    xi_orbit = -0.5 * L;
    // Launch double support: ZMP on the rear foot at -d0/2, CoM starting at
    // rest over the midpoint. Reaching the orbit entry state exactly when the
    // front foot becomes the stance requires
    //   (L^2 - (2 v*/w)^2) u^2 - 4 L u + 3 = 0,   u = 1 / d0.
    const double a = L * L - 4.0 * v_orbit * v_orbit / (w * w);
    const double b = -4.0 * L;
    const double c = 3.0;
    double u = 0.0;
    if (std::abs(a) < 1.0e-12) {
      u = -c / b;
    } else {
      const double disc = b * b - 4.0 * a * c;
      if (disc < 0.0) throw PlanError("walk plan: no feasible launch stagger");
      const double r1 = (-b + std::sqrt(disc)) / (2.0 * a);
      const double r2 = (-b - std::sqrt(disc)) / (2.0 * a);
      // Valid root: positive stagger wider than the step advance.
      for (double r : {r1, r2})
        if (r > 0.0 && 1.0 / r >= L && (u <= 0.0 || r > u)) u = r;
      if (u <= 0.0) throw PlanError("walk plan: no feasible launch stagger");
    }
    d0 = 1.0 / u;
  }
  if (d0 > p.max_step_span)
    throw PlanError("walk plan: launch stagger exceeds reachable span");

  const double x_rear = -0.5 * d0;
  const double x_front = 0.5 * d0;
  plan.initial_feet = {{left_frame, x_rear}, {right_frame, x_front}};

  const ContactSet both = stance_set({&left, &right});

  // Launch duration that carries (0, 0) to the orbit entry under ZMP = rear.
  double t_launch;
  if (in_place) {
    t_launch = std::log(1.0 + 2.0 * v_orbit / (d0 * w)) / w;
  } else {
    t_launch = std::acosh(2.0 - L / d0) / w;
  }
  t_launch = snap_to_grid(t_launch, p.ctrl_period);
  const double t_stand = snap_to_grid(std::max(p.stand_time, p.ctrl_period), p.ctrl_period);
  const double t_ds = snap_to_grid(p.double_support, p.ctrl_period);
  const double t_step = snap_to_grid(T, p.ctrl_period);
  if (t_ds >= t_step) throw PlanError("walk plan: double support swallows the step");

  // Quiet stance: ZMP at the CoM, a pendulum equilibrium.
  plan.phases.push_back({0.0, t_stand, both, 0.0, 0.0, 0.0, std::nullopt});
  // Launch.
  double x = 0.0, v = 0.0;
  plan.phases.push_back({t_stand, t_stand + t_launch, both, x_rear, x, v, std::nullopt});
  lip_propagate(w, x_rear, x, v, t_launch, x, v);

  double t0 = t_stand + t_launch;
  const FootContacts* stance_foot = &right;  // launch shifts weight onto the front foot
  const FootContacts* swing_foot = &left;
  double p_stance = x_front;
  double p_swing = x_rear;

  for (int k = 0; k < p.steps; ++k) {
    // Exit state of this step under ZMP at the stance foot.
    double x_exit, v_exit;
    lip_propagate(w, p_stance, x, v, t_step, x_exit, v_exit);

    // Next stance entry targets of the periodic orbit. The in-place sway
    // approaches alternating feet, so the entry offset and velocity flip
    // sign with the stance side; a forward gait always enters the same way.
    const double sigma_next = in_place ? ((k % 2 == 0) ? -1.0 : 1.0) : 1.0;
    const double xi_target = sigma_next * xi_orbit;
    const double v_target = sigma_next * v_orbit;
    // Capture-corrected foothold: lands the exit state exactly on the next
    // orbit entry, absorbing grid-snap and launch rounding in one step.
    double p_next = x_exit - xi_target + (v_exit - v_target) / w;
    if (k + 1 == p.steps) {
      // Final step: classic capture point, bringing the CoM to rest.
      p_next = x_exit + v_exit / w;
    }
    if (std::abs(p_next - p_stance) > p.max_step_span ||
        std::abs(p_next - p_swing) > p.max_step_span)
      throw PlanError("walk plan: footstep outside reachable span");

    // Double support: weight transfer onto the stance foot.
    plan.phases.push_back({t0, t0 + t_ds, both, p_stance, x, v, std::nullopt});
    lip_propagate(w, p_stance, x, v, t_ds, x, v);

    // Single support with the swing profile.
    const ContactSet single = stance_set({stance_foot});
    SwingProfile sw;
    sw.frame = swing_foot->frame;
    sw.t0 = t0 + t_ds;
    sw.t1 = t0 + t_step;
    sw.x_from = p_swing;
    sw.x_to = p_next;
    sw.height = p.swing_height;
    plan.phases.push_back({t0 + t_ds, t0 + t_step, single, p_stance, x, v, sw});
    lip_propagate(w, p_stance, x, v, t_step - t_ds, x, v);

    t0 += t_step;
    p_swing = p_stance;
    p_stance = p_next;
    std::swap(stance_foot, swing_foot);
  }

  // Terminal double support: ZMP at the capture point so the CoM settles.
  const double zmp_end = x + v / w;
  plan.phases.push_back({t0, std::numeric_limits<double>::infinity(), both, zmp_end, x, v,
                         std::nullopt});
  plan.horizon = t0;
  return plan;
}

WalkPlan generate_walk_plan(const WalkParams& p, int left_frame, int right_frame) {
  return generate_walk_plan(p, FootContacts{left_frame, {left_frame}},
                            FootContacts{right_frame, {right_frame}});
}

WalkPlan make_stance_plan(const ContactSet& contacts, double com_x, double com_height,
                          double horizon) {
  if (com_height <= 0.0) throw PlanError("stance plan: com_height must be positive");
  WalkPlan plan;
  plan.com_height = com_height;
  plan.omega = std::sqrt(9.81 / com_height);
  plan.horizon = horizon;
  plan.phases.push_back({0.0, std::numeric_limits<double>::infinity(), contacts, com_x,
                         com_x, 0.0, std::nullopt});
  return plan;
}

}  // namespace edgewbc
