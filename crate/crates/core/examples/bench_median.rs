use unavoid::*;
fn main() {
    for &n in &[200usize, 600, 1328] {
        let t = Tournament::random(n, 42);
        let start = std::time::Instant::now();
        let sigma = local_median_order(&t);
        let el = start.elapsed();
        let viol = check_m2(&t, &sigma).unwrap();
        println!("n={n}: {:?}, violations={}, forward={}", el, viol.len(), forward_arc_count(&t, &sigma));
    }
}
