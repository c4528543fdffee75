import os
import shutil
import tempfile
import unittest

from src.PyFirstHit.utils.filePathHelper import AtomicWrite, EnsureFolders, NoDuplicateFile


class TestFileOperations(unittest.TestCase):

    def setUp(self):
        self.base_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.base_dir)

    # 测试 EnsureFolders
    def test_ensure_folders(self):
        test_path = os.path.join(self.base_dir, "runs", "sphere")
        self.assertEqual(EnsureFolders(test_path), test_path)
        self.assertTrue(os.path.isdir(test_path), f"Folder {test_path} was not created.")
        EnsureFolders(test_path)
        self.assertEqual(EnsureFolders(""), "")

    # 测试 NoDuplicateFile
    def test_no_duplicate_file(self):
        first = NoDuplicateFile(self.base_dir, "train", ".log")
        self.assertEqual(first, os.path.join(self.base_dir, "train.log"))
        with open(first, 'x'):
            pass
        second = NoDuplicateFile(self.base_dir, "train", ".log")
        self.assertEqual(second, os.path.join(self.base_dir, "train_1.log"))

    # 测试 AtomicWrite
    def test_atomic_write(self):
        path = os.path.join(self.base_dir, "out", "samples.csv")
        with AtomicWrite(path) as fp:
            fp.write("x1,x2\n")
        with open(path, "r", encoding="utf-8") as fp:
            self.assertEqual(fp.read(), "x1,x2\n")

    def test_atomic_write_keeps_old_file_on_error(self):
        path = os.path.join(self.base_dir, "samples.csv")
        with open(path, "w", encoding="utf-8") as fp:
            fp.write("old")
        with self.assertRaises(ValueError):
            with AtomicWrite(path) as fp:
                fp.write("partial")
                raise ValueError("interrupted")
        with open(path, "r", encoding="utf-8") as fp:
            self.assertEqual(fp.read(), "old")
        self.assertEqual(os.listdir(self.base_dir), ["samples.csv"])


if __name__ == "__main__":
    unittest.main()
