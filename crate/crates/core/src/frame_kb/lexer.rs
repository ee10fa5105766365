use super::KbError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Dot,
    EqEq,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    /// Zero-based visual column, tabs advancing to the next multiple of 4.
    pub col: usize,
}

const TAB_WIDTH: usize = 4;

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, KbError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let mut col = 0;
        while i < chars.len() {
            let c = chars[i];
            if c == '\t' {
                col = (col / TAB_WIDTH + 1) * TAB_WIDTH;
                i += 1;
                continue;
            }
            if c.is_whitespace() {
                col += 1;
                i += 1;
                continue;
            }
            if c == '/' && chars.get(i + 1) == Some(&'/') {
                break;
            }
            let start_col = col;
            let tok = if c.is_ascii_alphanumeric() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push(Token {
                    tok: Tok::Word(chars[start..i].iter().collect()),
                    line: line_no,
                    col: start_col,
                });
                continue;
            } else if c == '=' && chars.get(i + 1) == Some(&'=') {
                i += 1;
                col += 1;
                Tok::EqEq
            } else {
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    '.' => Tok::Dot,
                    other => {
                        return Err(KbError::Syntax {
                            line: line_no,
                            col: start_col + 1,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                }
            };
            i += 1;
            col += 1;
            out.push(Token {
                tok,
                line: line_no,
                col: start_col,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_expand_tabs() {
        let toks = tokenize("if true\n\texcept // note\n  \tx == y").unwrap();
        let cols: Vec<(usize, usize)> = toks.iter().map(|t| (t.line, t.col)).collect();
        assert_eq!(cols, [(1, 0), (1, 3), (2, 4), (3, 4), (3, 6), (3, 9)]);
        assert_eq!(toks[4].tok, Tok::EqEq);
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("human ako object with\n  type: #").unwrap_err();
        assert_eq!(
            err,
            KbError::Syntax {
                line: 2,
                col: 9,
                message: "unexpected character `#`".into()
            }
        );
    }
}
