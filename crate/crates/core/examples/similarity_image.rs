//! Builds the grey-level similarity image of a case pair and writes it as a
//! PGM file.
//!
//! ```text
//! cargo run --example similarity_image -- [OUT.pgm]
//! ```

use casesim::embedding::{backend, EmbeddingProvider};
use casesim::simimage::{build_z, make_image, write_pgm, CaseInput};

fn case(id: &str, disputes: &[&str], codes: Vec<usize>) -> Result<CaseInput, Box<dyn std::error::Error>> {
    let vectors = backend("lf")?.embed(disputes)?;
    Ok(CaseInput { case_id: id.into(), vectors, codes })
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = case(
        "A",
        &["被告應否給付原告加班費？", "原告請求資遣費有無理由？", "兩造間勞動契約是否已合法終止？"],
        vec![1, 2, 3],
    )?;
    let b = case(
        "B",
        &["兩造間勞動契約是否已經終止？", "被告應給付原告之加班費數額為何？"],
        vec![3, 1],
    )?;

    let z = build_z(&a, &b)?;
    println!("Z ({}x{}), rows reordered by cluster code:", z.nrows(), z.ncols());
    for row in z.rows() {
        println!("  {}", row.iter().map(|v| format!("{v:6.3}")).collect::<Vec<_>>().join(" "));
    }

    let image = make_image(&a, &b, 32)?;
    println!("epsilon {:.4}; resized from {} to {}", image.epsilon_used, image.raw_side, image.side());
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    for row in image.pixels.rows().into_iter().step_by(2) {
        println!("  {}", row.iter().map(|&g| shades[g as usize * 9 / 255]).collect::<String>());
    }

    let out = std::env::args().nth(1).unwrap_or_else(|| "similarity.pgm".into());
    write_pgm(out.as_ref(), &image.pixels)?;
    println!("wrote {out}");
    Ok(())
}
