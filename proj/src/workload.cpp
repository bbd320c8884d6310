#include "sweep/workload.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <istream>
#include <ostream>
#include <random>

namespace sweep {

using nlohmann::json;

const char* activity_model_name(ActivityModel m) {
  switch (m) {
    case ActivityModel::FixedRatio: return "fixed-ratio";
    case ActivityModel::GapBands: return "gap-bands";
  }
  return "unknown";
}

std::optional<ActivityModel> activity_model_from_name(std::string_view s) {
  if (s == "fixed-ratio") return ActivityModel::FixedRatio;
  if (s == "gap-bands") return ActivityModel::GapBands;
  return std::nullopt;
}

Address account_address(uint64_t index) {
  std::string tag = "acct-" + std::to_string(index);
  Hash256 h = hash256(ByteView(reinterpret_cast<const uint8_t*>(tag.data()), tag.size()));
  Address a;
  std::copy_n(h.begin(), a.size(), a.begin());
  return a;
}

std::vector<std::pair<Address, u128>> genesis_alloc_for(const WorkloadSpec& spec) {
  std::vector<std::pair<Address, u128>> alloc;
  alloc.reserve(spec.total_indices());
  for (uint64_t i = 0; i < spec.total_indices(); ++i)
    alloc.emplace_back(account_address(i), kFaucetBalance);
  return alloc;
}

namespace {

constexpr uint64_t kNever = UINT64_MAX;

uint64_t pick(std::mt19937_64& rng, uint64_t n) { return rng() % n; }

// gap' uniform in [3g/4, 5g/4]
uint64_t jitter(std::mt19937_64& rng, uint64_t gap) {
  uint64_t lo = std::max<uint64_t>(1, gap * 3 / 4);
  return lo + pick(rng, gap / 2 + 1);
}

struct SenderSchedule {
  std::vector<uint64_t> next_due;  // block at which the account wants to send
  std::vector<uint64_t> gap;       // 0 = one-shot, never rescheduled
};

// Inter-transaction gap bands: weights follow the measured per-account
// distribution (62.34% <=1 day, 13.66% <=1 week, 6.38% <=2 weeks, 6.57%
// <=1 month, 9.45% <=6 months, 1.60% longer), with one calendar week mapped
// to one epoch. Only a minority of accounts are ongoing transactors; the
// rest appear once early and go dormant, which is what gives the declining
// active-ratio curve.
constexpr double kBandedFraction = 0.2;

SenderSchedule build_schedule(const WorkloadSpec& spec, std::mt19937_64& rng) {
  SenderSchedule s;
  s.next_due.assign(spec.accounts, kNever);
  s.gap.assign(spec.accounts, 0);
  uint64_t eps = spec.epoch_length;

  std::vector<uint64_t> order(spec.accounts);
  for (uint64_t i = 0; i < spec.accounts; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  if (spec.model == ActivityModel::FixedRatio) {
    auto active = std::max<uint64_t>(
        1, static_cast<uint64_t>(std::llround(spec.active_ratio * spec.accounts)));
    active = std::min(active, spec.accounts);
    for (uint64_t i = 0; i < active; ++i) {
      s.gap[order[i]] = 1;
      s.next_due[order[i]] = 1;
    }
    return s;
  }

  const uint64_t cumulative_weights[] = {6234, 7600, 8238, 8895, 9840, 10000};
  const uint64_t gap_bases[] = {std::max<uint64_t>(1, eps / 7), eps, 2 * eps, 4 * eps,
                                26 * eps, 0};
  uint64_t banded = static_cast<uint64_t>(std::llround(kBandedFraction * spec.accounts));
  for (uint64_t i = 0; i < spec.accounts; ++i) {
    uint64_t acct = order[i];
    if (i < banded) {
      uint64_t roll = pick(rng, 10000);
      size_t band = 0;
      while (roll >= cumulative_weights[band]) ++band;
      uint64_t base = gap_bases[band];
      if (base == 0) {  // "others": a single appearance somewhere in the run
        s.next_due[acct] = 1 + pick(rng, spec.blocks);
      } else {
        s.gap[acct] = base;
        s.next_due[acct] = 1 + pick(rng, std::min(base, spec.blocks));
      }
    } else {
      // One-shot cohort: active once during the first epoch, then dormant.
      s.next_due[acct] = 1 + pick(rng, std::min(eps, spec.blocks));
    }
  }
  return s;
}

}  // namespace

Trace generate_workload(const WorkloadSpec& spec) {
  if (spec.accounts == 0 || spec.blocks == 0 || spec.miners == 0 || spec.epoch_length == 0)
    throw std::invalid_argument("workload spec has a zero dimension");
  if (spec.txs_per_block > spec.accounts * 1024)
    throw std::invalid_argument("infeasible spec: more txs per block than accounts can issue");
  if (spec.model == ActivityModel::FixedRatio &&
      (spec.active_ratio <= 0.0 || spec.active_ratio > 1.0))
    throw std::invalid_argument("active ratio out of (0, 1]");

  std::mt19937_64 rng(spec.seed);
  SenderSchedule sched = build_schedule(spec, rng);

  // Recipient pools: ongoing transactors receive most traffic; a slice goes
  // to arbitrary (typically dormant) accounts, which respawns them as pawns.
  std::vector<uint32_t> recipient_pool;
  for (uint64_t i = 0; i < spec.accounts; ++i)
    if (sched.gap[i] != 0 || sched.next_due[i] != kNever) recipient_pool.push_back(i);
  if (spec.model == ActivityModel::GapBands) {
    recipient_pool.clear();
    for (uint64_t i = 0; i < spec.accounts; ++i)
      if (sched.gap[i] != 0) recipient_pool.push_back(i);
  }
  if (recipient_pool.empty()) recipient_pool.push_back(0);

  // Feasibility ledger: lower bound of each account's balance at run time
  // (rewards and restore flows only ever add), so a tx valid here is valid in
  // both engines.
  std::vector<u128> ledger(spec.total_indices(), kFaucetBalance);

  Trace trace;
  trace.spec = spec;
  trace.blocks.resize(spec.blocks);

  std::vector<std::pair<uint64_t, uint64_t>> due;  // (tie-broken rank, account)
  for (uint64_t b = 1; b <= spec.blocks; ++b) {
    TraceBlock& tb = trace.blocks[b - 1];
    tb.miner = static_cast<uint32_t>(spec.accounts + (b - 1) % spec.miners);

    due.clear();
    for (uint64_t i = 0; i < spec.accounts; ++i)
      if (sched.next_due[i] <= b) due.emplace_back((i + b * 7919) % spec.accounts, i);
    // Longest-waiting first; rotating rank breaks ties fairly.
    std::sort(due.begin(), due.end(), [&](const auto& x, const auto& y) {
      if (sched.next_due[x.second] != sched.next_due[y.second])
        return sched.next_due[x.second] < sched.next_due[y.second];
      return x.first < y.first;
    });

    std::vector<char> is_sender(spec.accounts, 0), is_recipient(spec.accounts, 0);
    for (const auto& [rank, acct] : due) {
      if (tb.txs.size() >= spec.txs_per_block) break;
      if (is_recipient[acct]) continue;
      sched.next_due[acct] = sched.gap[acct] ? b + jitter(rng, sched.gap[acct]) : kNever;
      if (ledger[acct] <= kTransferFee) continue;  // drained; skip this round

      // Recipient: distinct within the block and never a block's sender
      // (keeps per-engine nonce planning one-step).
      uint32_t recipient = UINT32_MAX;
      if (spec.accounts == 1) {
        recipient = 0;  // degenerate single-account spec: self-transfer
      } else {
        bool dormant_slice = spec.model == ActivityModel::GapBands && pick(rng, 10) == 0;
        for (int attempt = 0; attempt < 64 && recipient == UINT32_MAX; ++attempt) {
          uint32_t r = dormant_slice
                           ? static_cast<uint32_t>(pick(rng, spec.accounts))
                           : recipient_pool[pick(rng, recipient_pool.size())];
          if (r != acct && !is_sender[r] && !is_recipient[r]) recipient = r;
        }
        if (recipient == UINT32_MAX) continue;
      }

      TraceTx tx;
      tx.from = static_cast<uint32_t>(acct);
      tx.to = recipient;
      tx.fee = kTransferFee;
      if (!spec.zero_value) {
        u128 desired = 1 + pick(rng, 3'000'000'000ull);
        tx.value = std::min(desired, ledger[acct] - tx.fee);
      }
      ledger[acct] -= tx.value + tx.fee;
      ledger[recipient] += tx.value;
      ledger[tb.miner] += tx.fee;
      is_sender[acct] = 1;
      is_recipient[recipient] = 1;
      tb.txs.push_back(tx);
    }
  }
  return trace;
}

void write_trace_jsonl(const Trace& trace, std::ostream& out) {
  const WorkloadSpec& s = trace.spec;
  json head;
  head["accounts"] = s.accounts;
  head["blocks"] = s.blocks;
  head["txs_per_block"] = s.txs_per_block;
  head["model"] = activity_model_name(s.model);
  head["active_ratio"] = s.active_ratio;
  head["seed"] = s.seed;
  head["miners"] = s.miners;
  head["zero_value"] = s.zero_value;
  head["epoch_length"] = s.epoch_length;
  out << head.dump() << "\n";
  for (const TraceBlock& tb : trace.blocks) {
    json j;
    j["miner"] = tb.miner;
    json txs = json::array();
    for (const TraceTx& tx : tb.txs)
      txs.push_back({tx.from, tx.to, u128_to_string(tx.value), u128_to_string(tx.fee)});
    j["txs"] = std::move(txs);
    out << j.dump() << "\n";
  }
}

Trace read_trace_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace file");
  json head = json::parse(line);
  Trace trace;
  WorkloadSpec& s = trace.spec;
  s.accounts = head.at("accounts").get<uint64_t>();
  s.blocks = head.at("blocks").get<uint64_t>();
  s.txs_per_block = head.at("txs_per_block").get<uint32_t>();
  auto model = activity_model_from_name(head.at("model").get<std::string>());
  if (!model) throw std::runtime_error("unknown activity model in trace");
  s.model = *model;
  s.active_ratio = head.at("active_ratio").get<double>();
  s.seed = head.at("seed").get<uint64_t>();
  s.miners = head.at("miners").get<uint32_t>();
  s.zero_value = head.at("zero_value").get<bool>();
  s.epoch_length = head.at("epoch_length").get<uint64_t>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    TraceBlock tb;
    tb.miner = j.at("miner").get<uint32_t>();
    for (const json& t : j.at("txs")) {
      TraceTx tx;
      tx.from = t.at(0).get<uint32_t>();
      tx.to = t.at(1).get<uint32_t>();
      tx.value = u128_from_string(t.at(2).get<std::string>());
      tx.fee = u128_from_string(t.at(3).get<std::string>());
      tb.txs.push_back(tx);
    }
    trace.blocks.push_back(std::move(tb));
  }
  if (trace.blocks.size() != s.blocks) throw std::runtime_error("trace block count mismatch");
  return trace;
}

std::vector<double> measured_activity(const Trace& trace) {
  uint64_t eps = trace.spec.epoch_length;
  uint64_t epochs = trace.spec.blocks / eps;
  std::vector<double> ratios;
  for (uint64_t e = 0; e < epochs; ++e) {
    std::set<uint32_t> touched;
    for (uint64_t b = e * eps; b < (e + 1) * eps && b < trace.blocks.size(); ++b) {
      for (const TraceTx& tx : trace.blocks[b].txs) {
        touched.insert(tx.from);
        touched.insert(tx.to);
      }
    }
    ratios.push_back(static_cast<double>(touched.size()) / trace.spec.accounts);
  }
  return ratios;
}

}  // namespace sweep
