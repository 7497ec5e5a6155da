/**
 * Grayscale rasters and the two on-disk formats shared with the acquisition
 * simulator: 8-bit PGM (P5) for images and EMAP for float32 error /
 * probability maps (`EMAP <width> <height>\n` + little-endian float32
 * payload, row-major, no trailing bytes).
 */

import * as fs from 'node:fs'

export interface Grid {
  width: number
  height: number
  /** row-major, length = width * height */
  data: Float32Array
}

export function makeGrid(width: number, height: number, fill = 0): Grid {
  const data = new Float32Array(width * height)
  if (fill !== 0) data.fill(fill)
  return { width, height, data }
}

function parseHeaderInts(buf: Buffer, start: number, count: number): { values: number[]; offset: number } {
  const values: number[] = []
  let i = start
  while (values.length < count) {
    while (i < buf.length && isSpace(buf[i])) i++
    if (i < buf.length && buf[i] === 0x23 /* # */) {
      while (i < buf.length && buf[i] !== 0x0a && buf[i] !== 0x0d) i++
      continue
    }
    let j = i
    while (j < buf.length && !isSpace(buf[j])) j++
    const token = buf.subarray(i, j).toString('ascii')
    if (!/^[0-9]+$/.test(token)) {
      throw new Error(`malformed netpbm header token ${JSON.stringify(token)}`)
    }
    values.push(parseInt(token, 10))
    i = j
  }
  if (i >= buf.length || !isSpace(buf[i])) {
    throw new Error('netpbm header not terminated by whitespace')
  }
  return { values, offset: i + 1 }
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d || byte === 0x0b || byte === 0x0c
}

export function readPgm(path: string): Grid {
  const buf = fs.readFileSync(path)
  if (buf.length < 2 || buf[0] !== 0x50 || buf[1] !== 0x35) {
    throw new Error(`${path}: not a P5 PGM file`)
  }
  const { values, offset } = parseHeaderInts(buf, 2, 3)
  const [width, height, maxval] = values
  if (maxval !== 255) {
    throw new Error(`${path}: unsupported PGM bit depth (maxval=${maxval})`)
  }
  const expected = width * height
  if (buf.length - offset !== expected) {
    throw new Error(`${path}: payload is ${buf.length - offset} bytes, header demands ${expected}`)
  }
  const data = new Float32Array(expected)
  for (let i = 0; i < expected; i++) data[i] = buf[offset + i] / 255
  return { width, height, data }
}

export function writePgm(grid: Grid, path: string): void {
  const header = Buffer.from(`P5\n${grid.width} ${grid.height}\n255\n`, 'ascii')
  const payload = Buffer.alloc(grid.data.length)
  for (let i = 0; i < grid.data.length; i++) {
    // round-half-up to match the simulator's quantization rule
    const byte = Math.floor(grid.data[i] * 255 + 0.5)
    payload[i] = byte < 0 ? 0 : byte > 255 ? 255 : byte
  }
  fs.writeFileSync(path, Buffer.concat([header, payload]))
}

export function readEmap(path: string): Grid {
  const buf = fs.readFileSync(path)
  const nl = buf.indexOf(0x0a)
  if (nl < 0) throw new Error(`${path}: EMAP header line missing newline`)
  const fields = buf.subarray(0, nl).toString('ascii').split(/\s+/)
  if (fields.length !== 3 || fields[0] !== 'EMAP') {
    throw new Error(`${path}: bad EMAP magic`)
  }
  const width = parseInt(fields[1], 10)
  const height = parseInt(fields[2], 10)
  if (!Number.isFinite(width) || !Number.isFinite(height)) {
    throw new Error(`${path}: malformed EMAP dimensions`)
  }
  const expected = 4 * width * height
  if (buf.length - nl - 1 !== expected) {
    throw new Error(`${path}: payload is ${buf.length - nl - 1} bytes, header demands ${expected}`)
  }
  const data = new Float32Array(width * height)
  for (let i = 0; i < data.length; i++) {
    data[i] = buf.readFloatLE(nl + 1 + 4 * i)
    if (Number.isNaN(data[i])) throw new Error(`${path}: EMAP payload contains NaN`)
  }
  return { width, height, data }
}

export function writeEmap(grid: Grid, path: string): void {
  const header = Buffer.from(`EMAP ${grid.width} ${grid.height}\n`, 'ascii')
  const payload = Buffer.alloc(4 * grid.data.length)
  for (let i = 0; i < grid.data.length; i++) payload.writeFloatLE(grid.data[i], 4 * i)
  fs.writeFileSync(path, Buffer.concat([header, payload]))
}
