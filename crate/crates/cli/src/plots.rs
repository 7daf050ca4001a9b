//! Gnuplot scripts written next to the CSV outputs.

/// Plots of a run: energies, entropies, mixing edges and the energy drift.
pub fn series_script(series_csv: &str) -> String {
    format!(
        r#"set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 1200,900
set output "series.png"
set multiplot layout 2,2
set xlabel "t"
set title "energies"
plot "{f}" using "t":"E_p" with lines, "" using "t":"E_k" with lines
set title "entropies and perimeter"
set logscale y
plot "{f}" using "t":"H" with lines, "" using "t":"S" with lines, "" using "t":"P" with lines
unset logscale y
set title "mixing edges"
plot "{f}" using "t":"a_plus" with lines, "" using "t":"a_minus" with lines, \
     "" using "t":"b_plus" with lines, "" using "t":"b_minus" with lines
set title "energy drift"
plot "{f}" using "t":"drift" with lines
unset multiplot
"#,
        f = series_csv
    )
}

/// Energy against its envelope, and the normalised ratios against time.
pub fn bounds_script(bounds_csv: &str, limits: (f64, f64, f64)) -> String {
    let (e, h, p) = limits;
    format!(
        r#"set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 1200,500
set output "bounds.png"
set multiplot layout 1,2
set xlabel "t"
set title "E_p and envelope"
set logscale xy
plot "{f}" using "t":"E_p" with lines, "" using "t":"envelope" with lines
unset logscale xy
set title "normalised growth"
set yrange [0:*]
plot "{f}" using "t":"r_e" with lines, {e} title "energy limit", \
     "" using "t":"r_h" with lines, {h} title "entropy limit", \
     "" using "t":"r_p" with lines, {p} title "perimeter limit"
unset multiplot
"#,
        f = bounds_csv
    )
}

/// Measured edges over the Riemann prediction.
pub fn riemann_script(riemann_csv: &str) -> String {
    format!(
        r#"set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 800,600
set output "riemann.png"
set xlabel "t"
set ylabel "measured / predicted edge speed"
plot "{f}" using "t":"ratio_plus" with linespoints, "" using "t":"ratio_minus" with linespoints
"#,
        f = riemann_csv
    )
}

/// Ratio samples of an interpolation check.
pub fn interp_script(interp_csv: &str) -> String {
    format!(
        r#"set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 800,600
set output "interp.png"
set xlabel "profile"
set ylabel "lhs / rhs"
set yrange [0:1.05]
plot "{f}" using "index":"ratio" with points, "" using "index":"ratio_monotonized" with points, 1 notitle
"#,
        f = interp_csv
    )
}
