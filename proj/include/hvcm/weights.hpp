#pragma once

// Scalar-generic urn weights, instantiated with double in the library and with
// exact rationals in tests.

namespace hvcm::weights {

// Pitman-Yor urn: an existing item with `count` draws.
template <class T>
T existing(const T& count, const T& discount) {
  return count - discount;
}

// Pitman-Yor urn: mass reserved for an unseen item given `distinct` seen items.
template <class T>
T fresh(const T& distinct, const T& discount, const T& concentration) {
  return concentration + discount * distinct;
}

// Probability that a newly opened auxiliary vertex receives label r from the
// shared urn. `label_tables` is V(., r); zero means r has never been a label,
// in which case the aggregate new-label mass is returned.
template <class T>
T label_probability(const T& label_tables, const T& total_tables, const T& distinct_labels,
                    const T& alpha, const T& theta) {
  const T denom = total_tables + theta;
  if (label_tables > T(0)) return existing(label_tables, alpha) / denom;
  return fresh(distinct_labels, alpha, theta) / denom;
}

// Probability of escaping a sender's local urn: (theta_s + alpha_s V(s, .)) / (m(s) + theta_s).
template <class T>
T escape_probability(const T& sender_tables, const T& sender_total, const T& alpha_s,
                     const T& theta_s) {
  return fresh(sender_tables, alpha_s, theta_s) / (sender_total + theta_s);
}

// Predictive probability of receiver r for sender s:
//   [D(s,r) - alpha_s V(s,r) + (theta_s + alpha_s V(s,.)) G(r)] / (m(s) + theta_s)
// with G the shared-urn label probability. For pairs unseen locally D = V = 0 and
// only the escape term remains.
template <class T>
T receiver_probability(const T& degree, const T& latent, const T& sender_tables,
                       const T& sender_total, const T& label_prob, const T& alpha_s,
                       const T& theta_s) {
  const T local = degree - alpha_s * latent;
  return (local + fresh(sender_tables, alpha_s, theta_s) * label_prob) / (sender_total + theta_s);
}

}  // namespace hvcm::weights
