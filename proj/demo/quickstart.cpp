// Small end-to-end tour: build an instance, run the coded algorithm and the
// baselines once, then let each copycat attack the coded run's public view.
#include <iostream>

#include "codedbai/codedbai.hpp"

using namespace codedbai;

int main() {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::Sphere;
  spec.d = 8;
  spec.k = 16;
  spec.seed = 7;
  const Instance inst = generate(spec);
  const HardnessReport hard = hardness(inst);
  std::cout << "instance: d=" << inst.dim() << " K=" << inst.num_arms()
            << " best=" << hard.best_id << " H2lin=" << hard.h2lin << "\n";

  const long T = 4000;
  const SecureResult secure = run_secure(inst, T, /*seed=*/42);
  std::cout << "secure:       declared " << secure.declared_best << " with "
            << secure.pulls_used << "/" << T << " pulls\n";

  const AlgorithmResult od = od_linbai(inst, T, 42);
  std::cout << "od_linbai:    declared " << od.declared_best << " with " << od.pulls_used
            << " pulls\n";
  const AlgorithmResult sr = single_round(inst, T, 42);
  std::cout << "single_round: declared " << sr.declared_best << " with " << sr.pulls_used
            << " pulls\n";

  ChloeView view(secure.transcript);
  Rng rng(123);
  const AttackResult coin = coin_toss_attack(view, inst.arms, rng);
  const AttackResult thresh = threshold_attack(view, inst.arms, secure.m / 2);
  const AttackResult decomp =
      decomposition_attack(view, inst.arms, DecompositionStrategy::OneSubset, rng);
  auto show = [&](const AttackResult& a) {
    std::cout << a.attacker << " guess:";
    for (int id : a.candidate_set) std::cout << ' ' << id;
    std::cout << (std::find(a.candidate_set.begin(), a.candidate_set.end(), hard.best_id) !=
                          a.candidate_set.end()
                      ? "  (contains best)"
                      : "  (misses best)")
              << "\n";
  };
  show(coin);
  show(thresh);
  show(decomp);
  return 0;
}
