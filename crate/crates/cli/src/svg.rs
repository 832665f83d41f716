//! Self-contained SVG plot emitters (no external renderer). Output is
//! byte-deterministic: fixed float formatting, fixed element order.

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn header(width: u32, height: u32, config_hash: &str, seed: u64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <!-- config_hash={config_hash} seed={seed} -->\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    )
}

/// 2-D histogram heatmap over (theta1, theta2); the two branch sheets are
/// drawn side by side. `counts` is laid out [branch][i1][i2].
pub fn histogram2d(
    grid: usize,
    counts: &[u64],
    config_hash: &str,
    seed: u64,
) -> Result<String, String> {
    if counts.iter().all(|&c| c == 0) {
        return Err("empty histogram".into());
    }
    let cell = 4u32;
    let pad = 10u32;
    let sheet = cell * grid as u32;
    let width = 2 * sheet + 3 * pad;
    let height = sheet + 2 * pad;
    let max = *counts.iter().max().unwrap() as f64;
    let mut out = header(width, height, config_hash, seed);
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    for b in 0..2 {
        let x0 = pad + b as u32 * (sheet + pad);
        for i1 in 0..grid {
            for i2 in 0..grid {
                let c = counts[(b * grid + i1) * grid + i2];
                if c == 0 {
                    continue;
                }
                let t = (c as f64 / max).sqrt(); // sqrt scale for visibility
                let shade = (255.0 - 255.0 * t).round() as u32;
                out.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" \
                     fill=\"rgb({shade},{shade},255)\"/>\n",
                    x0 + i1 as u32 * cell,
                    pad + (grid - 1 - i2) as u32 * cell,
                ));
            }
        }
        out.push_str(&format!(
            "<rect x=\"{x0}\" y=\"{pad}\" width=\"{sheet}\" height=\"{sheet}\" \
             fill=\"none\" stroke=\"black\"/>\n"
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Boundary classes on the Klein disk: mass-1 classes in orthonormal
/// coordinates (x0, x1, x2) plotted at (x1/x0, x2/x0).
pub fn klein_scatter(
    points: &[(f64, f64)],
    config_hash: &str,
    seed: u64,
) -> Result<String, String> {
    if points.is_empty() {
        return Err("empty scatter".into());
    }
    let size = 400u32;
    let c = size as f64 / 2.0;
    let r = c - 10.0;
    let mut out = header(size, size, config_hash, seed);
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n\
         <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        fmt(c),
        fmt(c),
        fmt(r)
    ));
    for &(x, y) in points {
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"crimson\"/>\n",
            fmt(c + r * x),
            fmt(c - r * y)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Growth data with a fitted line; x is plotted on the given scale values
/// directly (caller passes log n or n), y is log of the norm.
pub fn growth_plot(
    xs: &[f64],
    ys: &[f64],
    slope: f64,
    intercept: f64,
    label: &str,
    config_hash: &str,
    seed: u64,
) -> Result<String, String> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err("empty growth data".into());
    }
    let (w, h, pad) = (480u32, 320u32, 30.0f64);
    let (xmin, xmax) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (ymin, ymax) = (
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let xspan = (xmax - xmin).max(1e-12);
    let yspan = (ymax - ymin).max(1e-12);
    let px = |x: f64| pad + (x - xmin) / xspan * (w as f64 - 2.0 * pad);
    let py = |y: f64| h as f64 - pad - (y - ymin) / yspan * (h as f64 - 2.0 * pad);
    let mut out = header(w, h, config_hash, seed);
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    // fitted line
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
        fmt(px(xmin)),
        fmt(py(slope * xmin + intercept)),
        fmt(px(xmax)),
        fmt(py(slope * xmax + intercept))
    ));
    // data polyline
    let pts: Vec<String> =
        xs.iter().zip(ys).map(|(&x, &y)| format!("{},{}", fmt(px(x)), fmt(py(y)))).collect();
    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{label} slope={}</text>\n",
        fmt(pad),
        fmt(pad - 10.0),
        fmt(slope)
    ));
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_histogram_is_error() {
        assert!(histogram2d(4, &[0; 32], "x", 0).is_err());
    }

    #[test]
    fn single_bin_histogram() {
        let mut counts = vec![0u64; 32];
        counts[5] = 10;
        let svg = histogram2d(4, &counts, "abc", 1).unwrap();
        // one filled cell at full intensity plus two sheet frames
        assert_eq!(svg.matches("rgb(0,0,255)").count(), 1);
        assert!(svg.contains("config_hash=abc seed=1"));
    }

    #[test]
    fn svg_output_is_deterministic() {
        let xs: Vec<f64> = (1..=10).map(|k| (k as f64).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 * x + 0.2).collect();
        let a = growth_plot(&xs, &ys, 1.5, 0.2, "loglog", "deadbeef", 42).unwrap();
        let b = growth_plot(&xs, &ys, 1.5, 0.2, "loglog", "deadbeef", 42).unwrap();
        assert_eq!(a, b);
    }
}
