#include "aqe/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace aqe {

double round_delta(double delta_total, uint64_t k) {
    require_delta(delta_total);
    if (k == 0) throw std::invalid_argument("round_delta: rounds are numbered from 1");
    const double kd = static_cast<double>(k);
    return (6.0 / (std::numbers::pi * std::numbers::pi)) * delta_total / (kd * kd);
}

StoppingCondition StoppingCondition::taken(uint64_t m) {
    StoppingCondition c;
    c.kind = StopKind::samples_taken;
    c.value = static_cast<double>(m);
    return c;
}
StoppingCondition StoppingCondition::absolute(double eps) {
    if (!(eps > 0)) throw std::invalid_argument("absolute: eps must be positive");
    StoppingCondition c;
    c.kind = StopKind::absolute;
    c.value = eps;
    return c;
}
StoppingCondition StoppingCondition::relative(double eps) {
    if (!(eps > 0)) throw std::invalid_argument("relative: eps must be positive");
    StoppingCondition c;
    c.kind = StopKind::relative;
    c.value = eps;
    return c;
}
StoppingCondition StoppingCondition::threshold(double v) {
    StoppingCondition c;
    c.kind = StopKind::threshold;
    c.value = v;
    return c;
}
StoppingCondition StoppingCondition::topk(uint64_t k, TopDirection dir) {
    if (k == 0) throw std::invalid_argument("topk: K must be at least 1");
    StoppingCondition c;
    c.kind = StopKind::topk;
    c.k = k;
    c.direction = dir;
    return c;
}
StoppingCondition StoppingCondition::ordered() {
    StoppingCondition c;
    c.kind = StopKind::ordered;
    return c;
}

StoppingCondition StoppingCondition::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.empty()) throw std::invalid_argument("empty stopping condition");
    const std::string& head = parts[0];
    auto want = [&](size_t n) {
        if (parts.size() != n)
            throw std::invalid_argument("malformed stopping condition: " + text);
    };
    if (head == "taken") {
        want(2);
        return taken(std::stoull(parts[1]));
    }
    if (head == "abs") {
        want(2);
        return absolute(std::stod(parts[1]));
    }
    if (head == "rel") {
        want(2);
        return relative(std::stod(parts[1]));
    }
    if (head == "thresh") {
        want(2);
        return threshold(std::stod(parts[1]));
    }
    if (head == "topk") {
        want(3);
        TopDirection dir;
        if (parts[2] == "min") dir = TopDirection::smallest;
        else if (parts[2] == "max") dir = TopDirection::largest;
        else throw std::invalid_argument("topk direction must be min or max");
        return topk(std::stoull(parts[1]), dir);
    }
    if (head == "ordered") {
        want(1);
        return ordered();
    }
    throw std::invalid_argument("unknown stopping condition: " + text);
}

std::string StoppingCondition::to_string() const {
    std::ostringstream out;
    switch (kind) {
        case StopKind::samples_taken: out << "taken:" << static_cast<uint64_t>(value); break;
        case StopKind::absolute: out << "abs:" << value; break;
        case StopKind::relative: out << "rel:" << value; break;
        case StopKind::threshold: out << "thresh:" << value; break;
        case StopKind::topk:
            out << "topk:" << k << ":"
                << (direction == TopDirection::smallest ? "min" : "max");
            break;
        case StopKind::ordered: out << "ordered"; break;
    }
    return out.str();
}

bool eval_absolute(const ConfidenceInterval& ci, double eps) { return ci.width() <= eps; }

bool eval_relative(const ConfidenceInterval& ci, double eps) {
    if (ci.lower <= 0.0 && 0.0 <= ci.upper) return false;
    const double scale = std::min(std::abs(ci.lower), std::abs(ci.upper));
    return ci.width() <= eps * scale;
}

bool eval_threshold(const ConfidenceInterval& ci, double v) {
    return ci.upper < v || ci.lower > v;
}

bool eval_topk(const std::map<std::string, ConfidenceInterval>& group_cis, uint64_t k,
               TopDirection direction) {
    const size_t n = group_cis.size();
    if (k > n) throw std::invalid_argument("eval_topk: K exceeds group count");
    if (k == n) return true;
    // If a valid member set exists it must be the K groups with the extreme
    // endpoints, so sorting and splitting is complete.
    std::vector<ConfidenceInterval> cis;
    cis.reserve(n);
    for (const auto& [key, ci] : group_cis) cis.push_back(ci);
    if (direction == TopDirection::smallest) {
        std::sort(cis.begin(), cis.end(),
                  [](const auto& x, const auto& y) { return x.upper < y.upper; });
        double members_hi = -std::numeric_limits<double>::infinity();
        double rest_lo = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) {
            if (i < k) members_hi = std::max(members_hi, cis[i].upper);
            else rest_lo = std::min(rest_lo, cis[i].lower);
        }
        return members_hi < rest_lo;
    }
    std::sort(cis.begin(), cis.end(),
              [](const auto& x, const auto& y) { return x.lower > y.lower; });
    double members_lo = std::numeric_limits<double>::infinity();
    double rest_hi = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
        if (i < k) members_lo = std::min(members_lo, cis[i].lower);
        else rest_hi = std::max(rest_hi, cis[i].upper);
    }
    return members_lo > rest_hi;
}

bool eval_ordered(const std::map<std::string, ConfidenceInterval>& group_cis) {
    std::vector<ConfidenceInterval> cis;
    cis.reserve(group_cis.size());
    for (const auto& [key, ci] : group_cis) cis.push_back(ci);
    std::sort(cis.begin(), cis.end(),
              [](const auto& x, const auto& y) { return x.lower < y.lower; });
    for (size_t i = 1; i < cis.size(); ++i)
        if (cis[i].lower <= cis[i - 1].upper) return false;
    return true;
}

namespace {

// Membership certainty for one group against the others' current intervals;
// used to retire groups from sampling before the global condition holds.
struct TopkCertainty {
    bool certain_in = false;
    bool certain_out = false;
};

TopkCertainty topk_certainty(const std::vector<const ViewPort*>& targets, size_t self,
                             uint64_t k, TopDirection dir, double delta) {
    const size_t n = targets.size();
    const ConfidenceInterval mine = targets[self]->running.as_ci(delta);
    size_t below = 0, above = 0;
    for (size_t j = 0; j < n; ++j) {
        if (j == self) continue;
        const ConfidenceInterval other = targets[j]->running.as_ci(delta);
        if (other.upper < mine.lower) ++below;
        if (other.lower > mine.upper) ++above;
    }
    TopkCertainty c;
    if (dir == TopDirection::smallest) {
        c.certain_out = below >= k;
        c.certain_in = above >= n - k;
    } else {
        c.certain_out = above >= k;
        c.certain_in = below >= n - k;
    }
    return c;
}

}  // namespace

RunResult run_until_stopped(std::vector<ViewPort>& views, const RoundPump& pump,
                            const RoundSchedule& schedule, const StoppingCondition& condition,
                            int n_group_codes, const RoundObserver& observer) {
    require_delta(schedule.delta_total);
    const bool fixed_m = condition.kind == StopKind::samples_taken;

    std::vector<ViewPort*> targets;
    for (auto& v : views)
        if (v.condition_target) targets.push_back(&v);
    if (targets.empty()) throw std::invalid_argument("run_until_stopped: no target views");

    auto group_cis = [&]() {
        std::map<std::string, ConfidenceInterval> out;
        for (const ViewPort* v : targets)
            out.emplace(v->group_key, v->running.as_ci(v->delta_share));
        return out;
    };

    // Marks settled condition targets, then lets non-target views of fully
    // settled groups coast to a stop as well.
    auto refresh_finished = [&]() {
        const std::vector<const ViewPort*> tv(targets.begin(), targets.end());
        for (size_t self = 0; self < targets.size(); ++self) {
            ViewPort* v = targets[self];
            if (v->finished) continue;
            const ConfidenceInterval ci = v->running.as_ci(v->delta_share);
            bool settled = false;
            switch (condition.kind) {
                case StopKind::samples_taken:
                    settled = v->samples() >= static_cast<uint64_t>(condition.value);
                    break;
                case StopKind::absolute:
                    settled = eval_absolute(ci, condition.value);
                    break;
                case StopKind::relative:
                    settled = eval_relative(ci, condition.value);
                    break;
                case StopKind::threshold:
                    settled = eval_threshold(ci, v->threshold.value_or(condition.value));
                    break;
                case StopKind::topk: {
                    const TopkCertainty c = topk_certainty(tv, self, condition.k,
                                                           condition.direction, v->delta_share);
                    settled = c.certain_in || c.certain_out;
                    break;
                }
                case StopKind::ordered: {
                    settled = true;
                    for (const ViewPort* o : targets) {
                        if (o == v) continue;
                        const ConfidenceInterval other = o->running.as_ci(o->delta_share);
                        if (!(ci.upper < other.lower || other.upper < ci.lower)) {
                            settled = false;
                            break;
                        }
                    }
                    break;
                }
            }
            // a lowered HAVING threshold must be certified as well, whatever
            // the primary condition is
            if (settled && v->threshold && condition.kind != StopKind::threshold)
                settled = eval_threshold(ci, *v->threshold);
            if (settled) {
                v->finished = true;
                if (condition.kind == StopKind::samples_taken) {
                    v->final_ci = v->compute(v->delta_share);
                    v->running = {v->final_ci.lower, v->final_ci.upper};
                }
            }
        }
        for (auto& v : views) {
            if (v.condition_target || v.finished) continue;
            bool group_done = true;
            for (const ViewPort* t : targets)
                if (t->group_code == v.group_code && !t->finished) group_done = false;
            v.finished = group_done;
        }
    };

    auto condition_met = [&]() {
        switch (condition.kind) {
            case StopKind::topk: return eval_topk(group_cis(), condition.k, condition.direction);
            case StopKind::ordered: return eval_ordered(group_cis());
            default:
                return std::all_of(targets.begin(), targets.end(),
                                   [](const ViewPort* v) { return v->finished; });
        }
    };

    auto freeze_all = [&](uint64_t rounds) {
        for (auto& v : views) {
            v.finished = true;
            if (v.final_ci.delta == 0.0) v.final_ci = v.running.as_ci(v.delta_share);
        }
        return RunResult{StopOutcome::condition_met, rounds};
    };

    // Round zero: vacuous intervals, no error budget spent. Lets conditions
    // that hold deterministically (taken:0, thresholds outside the range)
    // stop before any data is read.
    for (auto& v : views) {
        const ConfidenceInterval vac = v.compute(v.delta_share);
        v.running = {vac.lower, vac.upper};
    }
    refresh_finished();
    if (observer) observer(0, views);
    if (condition_met()) return freeze_all(0);

    std::vector<uint8_t> unfinished_groups(static_cast<size_t>(std::max(0, n_group_codes)), 0);
    uint64_t k = 0;
    for (;;) {
        std::fill(unfinished_groups.begin(), unfinished_groups.end(), 0);
        bool any_ungrouped = false;
        for (const auto& v : views) {
            if (v.finished) continue;
            if (v.group_code < 0) any_ungrouped = true;
            else if (v.group_code < n_group_codes) unfinished_groups[v.group_code] = 1;
        }

        if (!pump(unfinished_groups, any_ungrouped)) {
            // Census: every still-unfinished view has now seen all of its rows.
            for (auto& v : views) {
                if (v.finished) continue;
                const double exact = v.exact_value();
                v.running = {exact, exact};
                v.forced_exact = true;
            }
            refresh_finished();
            if (observer) observer(k + 1, views);
            const bool met = condition_met();
            for (auto& v : views) {
                v.finished = true;
                if (v.final_ci.delta == 0.0) v.final_ci = v.running.as_ci(v.delta_share);
            }
            return {met ? StopOutcome::condition_met : StopOutcome::exhausted_exact, k};
        }
        ++k;

        if (!fixed_m) {
            for (auto& v : views) {
                if (v.finished) continue;
                v.running.fold(v.compute(round_delta(v.delta_share, k)));
            }
        }
        refresh_finished();
        if (observer) observer(k, views);
        if (condition_met()) return freeze_all(k);
    }
}

}  // namespace aqe
