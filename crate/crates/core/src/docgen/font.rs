//! A 5×9 bitmap font: rows 0..7 hold capitals and digits, rows 7..9 descenders.

pub const GLYPH_COLS: usize = 5;
pub const GLYPH_ROWS: usize = 9;

type Bitmap = [&'static str; GLYPH_ROWS];

macro_rules! g {
    ($($row:literal),+ $(,)?) => {{
        const ROWS: &[&str] = &[$($row),+];
        pad(ROWS)
    }};
}

const fn pad(rows: &[&'static str]) -> Bitmap {
    let mut out = ["....."; GLYPH_ROWS];
    let mut i = 0;
    while i < rows.len() {
        out[i] = rows[i];
        i += 1;
    }
    out
}

static GLYPHS: &[(char, Bitmap)] = &[
    ('0', g![".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."]),
    ('1', g!["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('2', g![".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"]),
    ('3', g!["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."]),
    ('4', g!["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."]),
    ('5', g!["#####", "#....", "####.", "....#", "....#", "#...#", ".###."]),
    ('6', g!["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."]),
    ('7', g!["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."]),
    ('8', g![".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."]),
    ('9', g![".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."]),
    ('A', g![".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('B', g!["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."]),
    ('C', g![".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."]),
    ('D', g!["###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."]),
    ('E', g!["#####", "#....", "#....", "####.", "#....", "#....", "#####"]),
    ('F', g!["#####", "#....", "#....", "####.", "#....", "#....", "#...."]),
    ('G', g![".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"]),
    ('H', g!["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('I', g![".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('J', g!["..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."]),
    ('K', g!["#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"]),
    ('L', g!["#....", "#....", "#....", "#....", "#....", "#....", "#####"]),
    ('M', g!["#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"]),
    ('N', g!["#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"]),
    ('O', g![".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('P', g!["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."]),
    ('Q', g![".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"]),
    ('R', g!["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"]),
    ('S', g![".####", "#....", "#....", ".###.", "....#", "....#", "####."]),
    ('T', g!["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."]),
    ('U', g!["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('V', g!["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."]),
    ('W', g!["#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."]),
    ('X', g!["#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"]),
    ('Y', g!["#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."]),
    ('Z', g!["#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"]),
    ('a', g![".....", ".....", ".###.", "....#", ".####", "#...#", ".####"]),
    ('b', g!["#....", "#....", "#.##.", "##..#", "#...#", "#...#", "####."]),
    ('c', g![".....", ".....", ".###.", "#....", "#....", "#...#", ".###."]),
    ('d', g!["....#", "....#", ".##.#", "#..##", "#...#", "#...#", ".####"]),
    ('e', g![".....", ".....", ".###.", "#...#", "#####", "#....", ".###."]),
    ('f', g!["..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."]),
    ('g', g![".....", ".....", ".####", "#...#", "#...#", "#...#", ".####", "....#", ".###."]),
    ('h', g!["#....", "#....", "#.##.", "##..#", "#...#", "#...#", "#...#"]),
    ('i', g!["..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."]),
    ('j', g!["...#.", ".....", "..##.", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."]),
    ('k', g!["#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."]),
    ('l', g![".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('m', g![".....", ".....", "##.#.", "#.#.#", "#.#.#", "#.#.#", "#.#.#"]),
    ('n', g![".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#"]),
    ('o', g![".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."]),
    ('p', g![".....", ".....", "####.", "#...#", "#...#", "#...#", "####.", "#....", "#...."]),
    ('q', g![".....", ".....", ".####", "#...#", "#...#", "#...#", ".####", "....#", "....#"]),
    ('r', g![".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."]),
    ('s', g![".....", ".....", ".####", "#....", ".###.", "....#", "####."]),
    ('t', g![".#...", ".#...", "###..", ".#...", ".#...", ".#..#", "..##."]),
    ('u', g![".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#"]),
    ('v', g![".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."]),
    ('w', g![".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."]),
    ('x', g![".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"]),
    ('y', g![".....", ".....", "#...#", "#...#", "#...#", "#...#", ".####", "....#", ".###."]),
    ('z', g![".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"]),
    ('.', g![".....", ".....", ".....", ".....", ".....", ".##..", ".##.."]),
    (',', g![".....", ".....", ".....", ".....", ".....", ".##..", ".##..", "..#..", ".#..."]),
    (':', g![".....", ".##..", ".##..", ".....", ".##..", ".##..", "....."]),
    (';', g![".....", ".##..", ".##..", ".....", ".##..", ".##..", "..#..", ".#..."]),
    ('-', g![".....", ".....", ".....", "#####", ".....", ".....", "....."]),
    ('/', g!["....#", "....#", "...#.", "..#..", ".#...", "#....", "#...."]),
    ('$', g!["..#..", ".####", "#.#..", ".###.", "..#.#", "####.", "..#.."]),
    ('%', g!["##...", "##..#", "...#.", "..#..", ".#...", "#..##", "...##"]),
    ('(', g!["...#.", "..#..", ".#...", ".#...", ".#...", "..#..", "...#."]),
    (')', g![".#...", "..#..", "...#.", "...#.", "...#.", "..#..", ".#..."]),
    ('#', g![".#.#.", ".#.#.", "#####", ".#.#.", "#####", ".#.#.", ".#.#."]),
    ('&', g![".##..", "#..#.", "#.#..", ".#...", "#.#.#", "#..#.", ".##.#"]),
    ('\'', g!["..#..", "..#..", ".#...", ".....", ".....", ".....", "....."]),
    ('+', g![".....", "..#..", "..#..", "#####", "..#..", "..#..", "....."]),
    ('*', g![".....", "#.#.#", ".###.", "#####", ".###.", "#.#.#", "....."]),
    ('=', g![".....", ".....", "#####", ".....", "#####", ".....", "....."]),
    ('!', g!["..#..", "..#..", "..#..", "..#..", "..#..", ".....", "..#.."]),
    ('?', g![".###.", "#...#", "....#", "...#.", "..#..", ".....", "..#.."]),
];

/// Bitmap rows for `c`, or `None` when the font has no such glyph.
pub fn glyph(c: char) -> Option<&'static Bitmap> {
    GLYPHS.iter().find(|(g, _)| *g == c).map(|(_, b)| b)
}

pub fn has_glyph(c: char) -> bool {
    glyph(c).is_some()
}

/// Ink cells `(col, row)` of a glyph.
pub fn ink_cells(c: char) -> Vec<(usize, usize)> {
    glyph(c)
        .map(|rows| {
            rows.iter()
                .enumerate()
                .flat_map(|(r, row)| {
                    row.bytes()
                        .enumerate()
                        .filter(|(_, b)| *b == b'#')
                        .map(move |(col, _)| (col, r))
                })
                .collect()
        })
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_glyph_is_well_formed() {
        for (c, rows) in GLYPHS {
            for row in rows {
                assert_eq!(row.len(), GLYPH_COLS, "glyph {c:?}");
            }
            assert!(!ink_cells(*c).is_empty(), "glyph {c:?} has no ink");
        }
        let mut chars: Vec<char> = GLYPHS.iter().map(|(c, _)| *c).collect();
        chars.sort_unstable();
        chars.dedup();
        assert_eq!(chars.len(), GLYPHS.len());
    }
}
