//! gnuplot scripts for the CSV files. Scripts name the CSV by file name
//! only, so an output directory can be moved as a whole.

use crate::harness::ExperimentKind;

/// Script for an ergodic or variance CSV named `csv_name`, rendering to
/// `<stem>.png` next to it.
pub fn plot_script(kind: ExperimentKind, csv_name: &str) -> String {
    let stem = csv_name.strip_suffix(".csv").unwrap_or(csv_name);
    let mut s = String::new();
    s.push_str("# gnuplot -c ");
    s.push_str(stem);
    s.push_str(".gp\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile missing 'NaN'\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{stem}.png'\n"));
    s.push_str("set logscale x\n");
    s.push_str("set xlabel 'beta'\n");
    s.push_str("set key top right autotitle columnhead\n");
    s.push_str("set grid\n");
    match kind {
        ExperimentKind::Ergodic => {
            s.push_str("set ylabel 'attack cost per state'\n");
            s.push_str(&format!(
                "plot '{csv_name}' using 'beta':'mc_mean':'mc_std_err' with yerrorbars pt 7 title 'Monte Carlo', \\\n"
            ));
            s.push_str("     '' using 'beta':'asymptotic_mean' with linespoints title 'asymptotic', \\\n");
            s.push_str("     '' using 'beta':'perfect_cost' with lines dt 2 title 'perfect knowledge'\n");
        }
        ExperimentKind::Variance => {
            s.push_str("set ylabel 'variance of attack cost'\n");
            s.push_str("set style fill transparent solid 0.25 noborder\n");
            s.push_str(&format!(
                "plot '{csv_name}' using 'beta':'var_lower':'var_upper' with filledcurves title 'bounds', \\\n"
            ));
            s.push_str("     '' using 'beta':'mc_variance' with linespoints pt 7 title 'Monte Carlo'\n");
        }
    }
    s
}
